"""Harmonic structures and regular sequences of them.

A pair ``(lam, rho)`` is a harmonic structure when the level-1 network, traced
back onto the boundary, reproduces the level-0 network exactly. ``residual``
measures the failure of that identity entrywise on the Laplacians.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares

from .graph import build_level
from .netalg import ResistorNetwork, schur_complement
from .templates import FractalTemplate

VERIFY_TOL = 1e-10
INFEASIBLE_TOL = 1e-6


class Infeasible(ValueError):
    """No harmonic structure exists for the requested lambda; carries the best residual."""

    def __init__(self, message: str, residual: float = math.inf, rho=None):
        super().__init__(message)
        self.residual = residual
        self.rho = rho


class SequenceError(ValueError):
    pass


# -- closed forms published for the builtin examples ------------------------------


def _gasket_rho(d: int):
    return lambda lam: 1.0 - lam * (d + 3) / (d + 1)


def _level3_rho(lam: float) -> float:
    # positive root of 5 rho^2 + (25/3 lam - 1) rho + 5 lam^2 - 7/3 lam = 0
    b = 25.0 / 3.0 * lam - 1.0
    c = 5.0 * lam * lam - 7.0 / 3.0 * lam
    return (-b + math.sqrt(b * b - 20.0 * c)) / 10.0


@dataclass(frozen=True)
class ClosedForm:
    relation: str
    rho: object
    upper: float

    def interval(self) -> tuple[float, float]:
        return 0.0, self.upper


def closed_form(t_or_name) -> ClosedForm | None:
    """Published lambda-rho relation for a builtin, or ``None`` if there is none."""
    name = t_or_name if isinstance(t_or_name, str) else t_or_name.name
    if name == "sierpinski3":
        return ClosedForm("5/3 lam + rho = 1", _gasket_rho(2), 3 / 5)
    if name.startswith("gasket_"):
        d = int(name.split("_")[1])
        return ClosedForm(f"lam ({d}+3)/({d}+1) + rho = 1", _gasket_rho(d), (d + 1) / (d + 3))
    if name == "vicsek":
        return ClosedForm("3 lam + 4 rho = 1", lambda lam: (1.0 - 3.0 * lam) / 4.0, 1 / 3)
    if name == "sierpinski_level3":
        return ClosedForm("5 lam^2 + lam (25/3 rho - 7/3) + 5 rho^2 - rho = 0", _level3_rho, 7 / 15)
    if name == "hata":
        return ClosedForm("lam^2 + lam + rho = 1", lambda lam: 1.0 - lam - lam * lam, (math.sqrt(5) - 1) / 2)
    return None


# -- residual -------------------------------------------------------------------


@dataclass(frozen=True)
class _Scalings:
    lambdas: np.ndarray
    rhos: np.ndarray
    r0: np.ndarray


def _rho_vector(t: FractalTemplate, rho) -> np.ndarray:
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if rho.size == 1 and t.n_rho_classes > 1:
        rho = np.full(t.n_rho_classes, rho[0])
    if rho.size != t.n_rho_classes:
        raise ValueError(f"template {t.name} has {t.n_rho_classes} rho classes, got {rho.size} values")
    return rho


def e0_laplacian(t: FractalTemplate, r0) -> np.ndarray:
    net = ResistorNetwork.from_edges(t.boundary_size, [(e.u, e.v, r) for e, r in zip(t.e0_edges, r0)])
    return net.laplacian().toarray()


def _traced(t: FractalTemplate, seq, depth: int) -> np.ndarray:
    g = build_level(t, depth, seq, 1)
    return schur_complement(g, g.boundary)


def residual(t: FractalTemplate, lam: float, rho, depth: int = 1, r0=None) -> float:
    """Max entrywise gap between the traced level-``depth`` Laplacian and the E0 Laplacian."""
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    rho = _rho_vector(t, rho)
    if np.any(rho < 0):
        raise ValueError("rho values must be non-negative")
    r0 = t.r0(lam) if r0 is None else np.asarray(r0, dtype=float)
    seq = _Scalings(np.full(depth, lam), np.tile(rho, (depth, 1)), r0)
    return float(np.abs(_traced(t, seq, depth) - e0_laplacian(t, r0)).max())


def sequence_residual(seq: HarmonicSequence, depth: int) -> float:
    """Trace gap for the first ``depth`` entries of a (possibly non-constant) sequence."""
    t = seq.template
    return float(np.abs(_traced(t, seq, depth) - e0_laplacian(t, seq.r0)).max())


# -- solving for rho ------------------------------------------------------------


def _resistance_sum(L: np.ndarray) -> float:
    n = L.shape[0]
    G = np.linalg.pinv(L)
    d = np.diag(G)
    return float((n * d.sum() - G.sum()))


def _residual_vector(t, lam, rho, r0, E0) -> np.ndarray:
    seq = _Scalings(np.array([lam]), np.atleast_2d(rho), r0)
    S = _traced(t, seq, 1)
    iu = np.triu_indices(t.boundary_size, k=1)
    return (S - E0)[iu]


def solve_rho(t: FractalTemplate, lam: float, r0=None) -> np.ndarray:
    """Rho per class making ``(lam, rho)`` a harmonic structure.

    One class: bracketed root of the summed effective-resistance gap, which is
    monotone in rho. Several classes: multi-start least squares. Raises
    ``Infeasible`` when the best residual exceeds ``INFEASIBLE_TOL``.
    """
    if not 0 < lam < 1:
        raise Infeasible(f"lambda {lam} outside (0, 1)")
    r0 = t.r0(lam) if r0 is None else np.asarray(r0, dtype=float)
    E0 = e0_laplacian(t, r0)
    k = t.n_rho_classes
    # the unstretched endpoint of the family: lines of zero resistance
    try:
        if residual(t, lam, np.zeros(k), 1, r0) <= VERIFY_TOL:
            return np.zeros(k)
    except ValueError:
        pass
    if k == 1:
        target = _resistance_sum(E0)

        def gap(rho):
            seq = _Scalings(np.array([lam]), np.array([[rho]]), r0)
            return _resistance_sum(_traced(t, seq, 1)) - target

        lo = 1e-13
        if gap(lo) >= 0:
            best = residual(t, lam, lo, 1, r0)
            raise Infeasible(f"no positive rho for lambda={lam} on {t.name}", best, np.array([lo]))
        hi = 1.0
        while gap(hi) <= 0:
            hi *= 2.0
            if hi > 1e8:
                raise Infeasible(f"rho unbounded for lambda={lam} on {t.name}")
        rho = np.array([brentq(gap, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)])
        res = residual(t, lam, rho, 1, r0)
        if res > VERIFY_TOL:
            rho, res = _polish(t, lam, rho, r0, E0)
    else:
        best = None
        for start in np.logspace(-3, 1, 5):
            rho, res = _polish(t, lam, np.full(k, start), r0, E0)
            if best is None or res < best[1]:
                best = (rho, res)
        rho, res = best
    if res > INFEASIBLE_TOL:
        raise Infeasible(f"best residual {res:.3g} for lambda={lam} on {t.name}", res, rho)
    return rho


def _polish(t, lam, rho0, r0, E0):
    fun = lambda x: _residual_vector(t, lam, np.exp(x), r0, E0)
    sol = least_squares(fun, np.log(rho0), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    rho = np.exp(sol.x)
    return rho, residual(t, lam, rho, 1, r0)


def sweep(t: FractalTemplate, lambdas) -> list[dict]:
    """Solve for rho on a grid of lambdas; infeasible points are reported, not raised."""
    rows = []
    for lam in lambdas:
        try:
            rho = solve_rho(t, float(lam))
            rows.append({"lam": float(lam), "rho": rho, "residual": residual(t, float(lam), rho), "feasible": True})
        except Infeasible as exc:
            rho = exc.rho if exc.rho is not None else np.full(t.n_rho_classes, np.nan)
            rows.append({"lam": float(lam), "rho": np.atleast_1d(rho), "residual": exc.residual, "feasible": False})
    return rows


def sweep_csv(t: FractalTemplate, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lam"] + [f"rho_{j}" for j in range(t.n_rho_classes)] + ["residual", "feasible"])
    for r in rows:
        w.writerow(
            [format(r["lam"], ".17g")]
            + [format(float(x), ".17g") for x in r["rho"]]
            + [format(float(r["residual"]), ".6e"), int(r["feasible"])]
        )
    return buf.getvalue()


# -- sequences --------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    lam: float
    rho: object = None


@dataclass(frozen=True)
class Perturbed:
    """``lam_k = lam + amplitude * ratio**k``, rho re-solved at every step."""

    lam: float
    amplitude: float
    ratio: float


@dataclass(frozen=True)
class HarmonicSequence:
    template: FractalTemplate
    lambdas: np.ndarray
    rhos: np.ndarray
    r0: np.ndarray
    generator: object
    residuals: np.ndarray = field(repr=False)

    @property
    def horizon(self) -> int:
        return len(self.lambdas)

    @property
    def target_lambda(self) -> float:
        return float(self.generator.lam)

    @property
    def lambda_star(self) -> float:
        return float(np.max(self.lambdas))

    @property
    def rho_star(self) -> float:
        return float(np.max(self.rhos))

    def delta(self, n: int) -> float:
        """``lam_1 * ... * lam_n`` (1 for n = 0)."""
        return float(np.prod(self.lambdas[:n]))

    def gamma(self, k: int) -> float:
        """Scaling of generation-``k`` connecting lines: 1 for k = 1, else ``delta(k-1)``."""
        if k < 1:
            raise ValueError("gamma is defined for k >= 1")
        return self.delta(k - 1)

    def delta_shift(self, n: int, m: int) -> float:
        """``lam_{n+1} * ... * lam_{n+m}``."""
        return float(np.prod(self.lambdas[n : n + m]))

    @property
    def condition_bound(self) -> float:
        """Analytic bound on ``sum_k |lam - lam_k|`` (0 for constant sequences)."""
        gen = self.generator
        if isinstance(gen, Perturbed):
            return abs(gen.amplitude) * gen.ratio / (1.0 - gen.ratio)
        return 0.0

    def extend(self, horizon: int) -> HarmonicSequence:
        if horizon <= self.horizon:
            return self
        return make_sequence(self.template, self.generator, horizon)


def make_sequence(t: FractalTemplate, generator, horizon: int) -> HarmonicSequence:
    """Certified regular sequence of harmonic structures of length ``horizon``."""
    if horizon < 1:
        raise SequenceError("horizon must be >= 1")
    if isinstance(generator, Constant):
        lam = float(generator.lam)
        if not 0 < lam < 1:
            raise SequenceError(f"lambda {lam} outside (0, 1)")
        r0 = t.r0(lam)
        if generator.rho is None:
            try:
                rho = solve_rho(t, lam, r0)
            except Infeasible as exc:
                raise SequenceError(f"lambda {lam} infeasible for {t.name}: {exc}") from exc
        else:
            rho = _rho_vector(t, generator.rho)
        res = residual(t, lam, rho, 1, r0)
        if res > VERIFY_TOL:
            raise SequenceError(f"(lambda={lam}, rho={rho.tolist()}) is not harmonic: residual {res:.3g}")
        lambdas = np.full(horizon, lam)
        rhos = np.tile(rho, (horizon, 1))
        residuals = np.full(horizon, res)
    elif isinstance(generator, Perturbed):
        if not 0 < generator.ratio < 1:
            raise SequenceError(f"ratio must lie in (0, 1), got {generator.ratio}; the lambda series would diverge")
        if t.depends_on_lambda:
            raise SequenceError(f"{t.name}: r0 depends on lambda, so only constant sequences keep r0 fixed")
        r0 = t.r0()
        lambdas = generator.lam + generator.amplitude * generator.ratio ** np.arange(1, horizon + 1)
        rhos, residuals = [], []
        for k, lam_k in enumerate(lambdas, start=1):
            try:
                rho = solve_rho(t, float(lam_k), r0)
            except Infeasible as exc:
                raise SequenceError(f"entry k={k} (lambda={lam_k:.6g}) infeasible: {exc}") from exc
            res = residual(t, float(lam_k), rho, 1, r0)
            if res > VERIFY_TOL:
                raise SequenceError(f"entry k={k} failed certification: residual {res:.3g}")
            rhos.append(rho)
            residuals.append(res)
        rhos = np.array(rhos)
        residuals = np.array(residuals)
    else:
        raise SequenceError(f"unknown generator {generator!r}")
    if np.max(lambdas) >= 1:
        raise SequenceError("sup lambda_i must be < 1")
    return HarmonicSequence(t, lambdas, rhos, r0, generator, residuals)


def kappa_bounds(seq: HarmonicSequence, horizon: int | None = None) -> tuple[float, float]:
    """Empirical ``(kappa_1, kappa_2)`` with ``kappa_1 lam^m <= delta_m^(n) <= kappa_2 lam^m``."""
    h = seq.horizon if horizon is None else min(horizon, seq.horizon)
    if h <= 0:
        return 1.0, 1.0
    logs = np.concatenate(([0.0], np.cumsum(np.log(seq.lambdas[:h]) - math.log(seq.target_lambda))))
    # log of delta_m^(n) / lam^m is logs[n+m] - logs[n]
    diff = logs[None, :] - logs[:, None]
    mask = np.triu(np.ones_like(diff, dtype=bool))
    vals = diff[mask]
    return float(math.exp(vals.min())), float(math.exp(vals.max()))


# -- discovery --------------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    r0: np.ndarray
    rho: np.ndarray
    residual: float


@dataclass(frozen=True)
class Discovery:
    candidates: list
    unique: bool


def discover(t: FractalTemplate, lam: float, free=None, n_random: int = 15, seed: int = 0) -> Discovery:
    """Search free level-0 resistances and rho for harmonic structures at ``lam``.

    ``free`` lists groups of E0 edge indices that share one unknown resistance;
    by default every finite edge is its own group and infinite edges stay open.
    When every finite edge is free the first group is pinned to 1, since the
    defining identity is invariant under joint scaling.
    """
    if not 0 < lam < 1:
        return Discovery([], True)
    base = t.r0(lam) if t.depends_on_lambda else t.r0()
    if free is None:
        free = [[i] for i, r in enumerate(base) if math.isfinite(r)]
    free = [list(g) for g in free]
    in_free = {i for g in free for i in g}
    finite = {i for i, r in enumerate(base) if math.isfinite(r)}
    normalise = finite <= in_free
    n_r = len(free) - (1 if normalise else 0)
    k = t.n_rho_classes
    E0_cache = {}

    def unpack(x):
        r0 = base.copy()
        vals = ([0.0] if normalise else []) + list(x[:n_r])
        for g, v in zip(free, vals):
            r0[g] = math.exp(v)
        return r0, np.exp(x[n_r:])

    def fun(x):
        r0, rho = unpack(x)
        key = tuple(np.round(r0, 14))
        if key not in E0_cache:
            E0_cache.clear()
            E0_cache[key] = e0_laplacian(t, r0)
        return _residual_vector(t, lam, rho, r0, E0_cache[key])

    rng = np.random.default_rng(seed)
    starts = [np.full(n_r + k, math.log(v)) for v in np.logspace(-3, 1, 5)]
    starts += [rng.uniform(math.log(1e-3), math.log(10.0), n_r + k) for _ in range(n_random)]
    found: list[Candidate] = []
    for x0 in starts:
        try:
            sol = least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        except (np.linalg.LinAlgError, ValueError):
            continue
        r0, rho = unpack(sol.x)
        try:
            res = residual(t, lam, rho, 1, r0)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if res >= 1e-8:
            continue
        if any(
            np.allclose(c.r0[np.isfinite(c.r0)], r0[np.isfinite(r0)], rtol=1e-5) and np.allclose(c.rho, rho, rtol=1e-5)
            for c in found
        ):
            continue
        found.append(Candidate(r0, rho, res))
    found.sort(key=lambda c: (tuple(c.rho), tuple(np.nan_to_num(c.r0, posinf=1e300))))
    return Discovery(found, len(found) <= 1)
