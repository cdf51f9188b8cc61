"""Dimension formulas, Moran-equation solver and resistance-diameter scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .graph import StretchedGraph, build_level
from .netalg import GroundedSolver
from .templates import FractalTemplate

RELATION_TOL = 1e-12
EXCLUSION_TOL = 1e-12
SCAN_MAX_VERTICES = 8000


@dataclass(frozen=True)
class ExcludedCase:
    """Parameters at which the spectral-dimension formula does not apply."""

    reasons: tuple[str, ...]

    def __str__(self) -> str:
        return "excluded: " + "; ".join(self.reasons)


def _check(N: int, lam: float) -> None:
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")


def hausdorff_resistance(N: int, lam: float) -> float:
    """Hausdorff dimension in the resistance metric, ``max{1, ln N / -ln lam}``."""
    _check(N, lam)
    return max(1.0, math.log(N) / -math.log(lam))


def spectral_dimension(N: int, lam: float, eta: float = 0.5, beta: float | None = None):
    """Spectral dimension for ``mu_eta``; an ``ExcludedCase`` at the critical beta."""
    _check(N, lam)
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if eta < 1:
        return max(1.0, math.log(N * N) / (math.log(N) - math.log(lam)))
    if beta is None:
        raise ValueError("eta = 1 needs beta")
    reasons = []
    if abs(beta * N * N * lam - 1.0) < EXCLUSION_TOL:
        reasons.append(f"beta = 1/(N^2 lam) = {1 / (N * N * lam):.6g}: the counting function gains a log factor")
    if not 0 < beta < 1 / N:
        msg = f"beta = {beta:.6g} outside (0, 1/N)"
        if not reasons:
            raise ValueError(msg)
        reasons.append(msg)
    if reasons:
        return ExcludedCase(tuple(reasons))
    return max(1.0, math.log(N * N) / -math.log(beta * lam))


def relation_check(N: int, lam: float) -> bool:
    """``d_S = 2 d_H / (d_H + 1)`` on the non-floor branch, ``d_S = d_H = 1`` below it."""
    dh = hausdorff_resistance(N, lam)
    ds = spectral_dimension(N, lam, 0.5)
    if math.log(N) / -math.log(lam) >= 1:
        return abs(ds - 2 * dh / (dh + 1)) <= RELATION_TOL
    return ds == 1.0 and dh == 1.0


def euclid_hausdorff(t: FractalTemplate, alpha: float) -> float:
    """Euclidean Hausdorff dimension ``max{s, 1}`` with ``sum (alpha r_i)^s = 1``."""
    if t.contraction_ratios is None:
        raise ValueError(f"template {t.name} carries no contraction ratios")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    r = alpha * np.asarray(t.contraction_ratios, dtype=float)
    f = lambda s: float(np.sum(r**s)) - 1.0
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    s = bisect(f, 0.0, hi, xtol=1e-12)
    return max(s, 1.0)


@dataclass(frozen=True)
class DimensionReport:
    N: int
    lam: float
    eta: float
    beta: float | None
    d_hausdorff: float
    d_spectral: object
    relation_ok: bool
    alpha: float | None = None
    d_euclid: float | None = None

    HEADER = ("N", "lam", "eta", "beta", "d_hausdorff", "d_spectral", "relation_ok", "alpha", "d_euclid")

    def row(self) -> list[str]:
        def f(x):
            return "" if x is None else format(x, ".15g")

        ds = str(self.d_spectral) if isinstance(self.d_spectral, ExcludedCase) else f(self.d_spectral)
        return [
            str(self.N), f(self.lam), f(self.eta), f(self.beta), f(self.d_hausdorff),
            ds, str(int(self.relation_ok)), f(self.alpha), f(self.d_euclid),
        ]


def report(N: int, lam: float, eta: float = 0.5, beta=None, template=None, alpha=None) -> DimensionReport:
    de = euclid_hausdorff(template, alpha) if (template is not None and alpha is not None) else None
    return DimensionReport(
        N, lam, eta, beta, hausdorff_resistance(N, lam), spectral_dimension(N, lam, eta, beta),
        relation_check(N, lam), alpha, de,
    )


# -- resistance diameters ----------------------------------------------------------


def _vertex_cells(g: StretchedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Depth and word index of the deepest cell containing each vertex.

    Cell vertices sit in level-n cells; critical and line vertices of
    generation k sit in the level-(k-1) cell of their owner. The level-m
    cell of a vertex is ``word // N**(depth - m)`` whenever ``m <= depth``.
    """
    n, N, B = g.level, g.N, g.B
    nc = len(g.template.critical_points)
    depth = np.empty(g.n_vertices, dtype=np.int64)
    word = np.empty(g.n_vertices, dtype=np.int64)
    nv = g.n_cell_vertices
    depth[:nv] = n
    word[:nv] = np.arange(nv) // B
    for k in range(1, n + 1):
        off = g.critical_offset(k)
        cnt = nc * N ** (k - 1)
        depth[off : off + cnt] = k - 1
        word[off : off + cnt] = np.arange(cnt) // nc
    s = g.subdivision
    if s > 1:
        lines = np.repeat(np.arange(g.n_lines), s - 1)
        sl = slice(g.interior_offset, g.n_vertices)
        depth[sl] = g.line_generation[lines] - 1
        word[sl] = g.line_owner[lines]
    return depth, word


@dataclass(frozen=True)
class DiameterScan:
    levels: np.ndarray
    cell_diameter: np.ndarray
    global_diameter: np.ndarray
    lambdas: np.ndarray = field(repr=False)

    @property
    def ratios(self) -> np.ndarray:
        """``cell_diameter[n+1] / cell_diameter[n]``."""
        return self.cell_diameter[1:] / self.cell_diameter[:-1]


def diameter_scan(t: FractalTemplate, seq, n_max: int) -> DiameterScan:
    """Max resistance diameter of level-n cells and of ``V_n`` for n = 0..n_max.

    Everything is measured in the level-``n_max`` network, which by
    compatibility induces the same resistance on every coarser vertex set.
    """
    if not 1 <= n_max <= 6:
        raise ValueError("n_max must lie in 1..6")
    g = build_level(t, n_max, seq, 1)
    if g.n_vertices > SCAN_MAX_VERTICES:
        raise ValueError(f"level {n_max} has {g.n_vertices} vertices; the scan is limited to {SCAN_MAX_VERTICES}")
    G = GroundedSolver(g, 0).block(np.arange(g.n_vertices))
    d = np.diag(G)
    depth, word = _vertex_cells(g)
    cell_diam = np.zeros(n_max + 1)
    glob = np.zeros(n_max + 1)
    for m in range(n_max + 1):
        inside = np.flatnonzero(depth >= m)
        cells = word[inside] // g.N ** (depth[inside] - m)
        order = np.argsort(cells, kind="stable")
        inside, cells = inside[order], cells[order]
        splits = np.flatnonzero(np.diff(cells)) + 1
        best = 0.0
        for idx in np.split(inside, splits):
            R = d[idx][:, None] + d[idx][None, :] - 2 * G[np.ix_(idx, idx)]
            best = max(best, float(R.max()))
        cell_diam[m] = best
        # V_m: level-m cell vertices and critical points of generation <= m
        vm = np.concatenate([g.cell_vertices(m).ravel(), np.arange(g.n_cell_vertices, g.critical_offset(m + 1))])
        R = d[vm][:, None] + d[vm][None, :] - 2 * G[np.ix_(vm, vm)]
        glob[m] = float(R.max())
    return DiameterScan(np.arange(n_max + 1), cell_diam, glob, np.asarray(seq.lambdas[:n_max]))
