"""The measures ``mu_eta = eta * mu_I + (1 - eta) * mu_Sigma`` and their lumped discretization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import StretchedGraph
from .templates import FractalTemplate


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureSpec:
    """Mixing weight ``eta``, line decay ``beta`` and per-slot line weights ``a``.

    ``a`` is indexed like ``template.slots`` and always sums to ``1 - beta * N``.
    """

    eta: float
    beta: float
    N: int
    a: np.ndarray

    @classmethod
    def create(cls, t: FractalTemplate, eta: float, beta: float, a=None) -> MeasureSpec:
        if not 0 < eta <= 1:
            raise MeasureError(f"eta must lie in (0, 1]; eta=0 gives a measure without full support (got {eta})")
        if not 0 < beta < 1 / t.N:
            raise MeasureError(f"beta must lie in (0, 1/N) = (0, {1 / t.N:.6g}), got {beta}")
        n_slots = t.n_slots
        if a is None:
            w = np.ones(n_slots)
        else:
            w = np.asarray(a, dtype=float)
            if w.shape != (n_slots,):
                raise MeasureError(f"expected {n_slots} line weights, got shape {w.shape}")
            if np.any(w <= 0):
                raise MeasureError("line weights must be positive")
        w = w * (1.0 - beta * t.N) / w.sum()
        return cls(float(eta), float(beta), t.N, w)

    def cell_measure(self, length: int) -> float:
        """Mass of any cell ``K_w`` with ``|w| = length``."""
        return self.eta * self.beta**length + (1.0 - self.eta) * float(self.N) ** (-length)

    def line_mass(self, generation: int, slot: int) -> float:
        return self.eta * self.beta ** (generation - 1) * self.a[slot]


def cell_measure(spec: MeasureSpec, word) -> float:
    return spec.cell_measure(len(word))


def vertex_masses(g: StretchedGraph, spec: MeasureSpec) -> np.ndarray:
    """Diagonal of the lumped mass matrix on ``g``.

    Each level-n cell hands its whole measure (both parts) to its boundary
    vertices in equal shares; each line spreads its mass evenly over its
    segments and every segment gives half to each endpoint.
    """
    if spec.N != g.N or len(spec.a) != g.template.n_slots:
        raise MeasureError("measure spec was built for a different template")
    m = np.zeros(g.n_vertices)
    cells = g.cell_vertices(g.level)
    np.add.at(m, cells.ravel(), spec.cell_measure(g.level) / g.B)
    line_mass = spec.eta * spec.beta ** (g.line_generation - 1.0) * spec.a[g.line_slot]
    conn = g.edge_kind == 1
    seg_mass = line_mass[g.edge_line[conn]] / g.subdivision
    np.add.at(m, g.edge_u[conn], 0.5 * seg_mass)
    np.add.at(m, g.edge_v[conn], 0.5 * seg_mass)
    return m


def line_mass_total(g: StretchedGraph, spec: MeasureSpec) -> float:
    return float(np.sum(spec.eta * spec.beta ** (g.line_generation - 1.0) * spec.a[g.line_slot]))
