"""Discrete Laplacians on stretched graphs: spectra, counting functions, Weyl fits."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .graph import StretchedGraph
from .measure import MeasureSpec, vertex_masses
from .netalg import ResistorNetwork

#: largest problem handed to the dense symmetric eigensolver
DENSE_EIG_MAX = 12000
ZERO_CLAMP = 1e-10


class SpectralError(ValueError):
    pass


@dataclass
class SpectralProblem:
    stiffness: sp.csr_matrix
    mass: np.ndarray
    bc: str
    vertices: np.ndarray
    _eigs: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.mass)


def assemble(g: StretchedGraph, spec: MeasureSpec, bc: str = "neumann") -> SpectralProblem:
    """Stiffness from conductances, lumped masses; Dirichlet drops the V0 rows.

    Zero-resistance lines (the unstretched limit) are contracted first and the
    masses of fused vertices are added.
    """
    net, labels = ResistorNetwork.from_graph(g).contracted()
    m = np.bincount(labels, weights=vertex_masses(g, spec), minlength=net.n_vertices)
    return problem_from_matrices(net.laplacian(), m, bc, np.unique(labels[g.boundary]))


def problem_from_matrices(K, mass, bc: str = "neumann", boundary=()) -> SpectralProblem:
    bc = bc.lower()
    K = sp.csr_matrix(K)
    mass = np.asarray(mass, dtype=float)
    if np.any(mass <= 0):
        raise SpectralError("vertex masses must be positive")
    keep = np.arange(K.shape[0])
    if bc == "dirichlet":
        keep = np.setdiff1d(keep, np.asarray(boundary, dtype=np.int64))
        K = K[keep][:, keep]
        mass = mass[keep]
    elif bc != "neumann":
        raise SpectralError(f"boundary condition must be 'neumann' or 'dirichlet', got {bc!r}")
    return SpectralProblem(K.tocsr(), mass, bc, keep)


def eigenvalues(p: SpectralProblem, k: int | None = None, dense_max: int = DENSE_EIG_MAX) -> np.ndarray:
    """Smallest ``k`` eigenvalues (all by default) of ``M^-1/2 K M^-1/2``, ascending."""
    if p.dim > dense_max:
        raise SpectralError(f"dimension {p.dim} exceeds the dense solver limit {dense_max}")
    if p._eigs is None:
        d = 1.0 / np.sqrt(p.mass)
        A = (p.stiffness.multiply(d[:, None]).multiply(d[None, :])).toarray()
        A = 0.5 * (A + A.T)
        ev = sla.eigh(A, eigvals_only=True, overwrite_a=True, check_finite=False)
        # round-off of a symmetric eigensolver is of order eps * |A|
        tol = max(ZERO_CLAMP, 64 * np.finfo(float).eps * abs(ev[-1]))
        if ev[0] < -tol:
            raise SpectralError(f"negative eigenvalue {ev[0]:.3g}: stiffness is not positive semidefinite")
        ev[np.abs(ev) <= tol] = 0.0
        p._eigs = np.maximum(ev, 0.0)
    return p._eigs if k is None else p._eigs[:k]


def counting(eigs, x: float) -> int:
    """``#{k : lambda_k <= x}``."""
    return int(np.searchsorted(np.sort(np.asarray(eigs)), x, side="right"))


@dataclass(frozen=True)
class CountingFit:
    slope: float
    intercept: float
    window: tuple[float, float]
    residual: float
    ratio_spread: float
    n_points: int

    @property
    def accepted(self) -> bool:
        return self.ratio_spread < 5.0


def fit_exponent(eigs, window=(0.05, 0.60)) -> CountingFit:
    """Least-squares slope of ``log N(x)`` against ``log x``.

    Samples are taken at every positive eigenvalue whose index falls between
    the window quantiles of the eigenvalue count.
    """
    lo, hi = window
    if not 0 <= lo < hi <= 1:
        raise SpectralError(f"fit window must satisfy 0 <= lo < hi <= 1, got {window}")
    ev = np.sort(np.asarray(eigs, dtype=float))
    pos = ev[ev > 0]
    if len(pos) < 50:
        raise SpectralError(f"need at least 50 positive eigenvalues for a fit, got {len(pos)}")
    n = len(ev)
    i0, i1 = int(np.floor(lo * n)), int(np.ceil(hi * n))
    x = ev[i0:i1]
    x = np.unique(x[x > 0])
    if len(x) < 2:
        raise SpectralError("fit window is empty")
    N = np.searchsorted(ev, x, side="right").astype(float)
    lx, lN = np.log(x), np.log(N)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, lN, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, intercept]) - lN) ** 2)))
    ratio = N / x**slope
    return CountingFit(float(slope), float(intercept), (lo, hi), resid, float(ratio.max() / ratio.min()), len(x))


@dataclass(frozen=True)
class BracketingReport:
    ok: bool
    sorted_ok: bool
    lower_violations: int
    upper_violations: int
    offset: int


def bracketing_check(neumann, dirichlet, b: int, rtol: float = 1e-9, atol: float = 1e-12) -> BracketingReport:
    """Interlacing ``lam_k^N <= lam_k^D <= lam_{k+b}^N`` for all valid k."""
    nev = np.asarray(neumann, dtype=float)
    dev = np.asarray(dirichlet, dtype=float)
    sorted_ok = bool(np.all(np.diff(nev) >= 0) and np.all(np.diff(dev) >= 0))
    k = min(len(nev), len(dev))

    def slack(x):
        return rtol * np.abs(x) + atol

    low = int(np.count_nonzero(nev[:k] > dev[:k] + slack(dev[:k])))
    kk = min(len(dev), len(nev) - b)
    up = int(np.count_nonzero(dev[:kk] > nev[b : b + kk] + slack(nev[b : b + kk]))) if kk > 0 else 0
    return BracketingReport(sorted_ok and low == 0 and up == 0, sorted_ok, low, up, b)


# -- CSV helpers -----------------------------------------------------------------------


def eigenvalues_csv(eigs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value"])
    for i, v in enumerate(eigs):
        w.writerow([i, format(float(v), ".17g")])
    return buf.getvalue()


def counting_csv(eigs) -> str:
    ev = np.sort(np.asarray(eigs, dtype=float))
    xs = np.unique(ev)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "N"])
    for x in xs:
        w.writerow([format(float(x), ".17g"), int(np.searchsorted(ev, x, side="right"))])
    return buf.getvalue()


def fit_csv(fit: CountingFit) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["slope", "intercept", "window_lo", "window_hi", "residual", "ratio_spread", "n_points"])
    w.writerow(
        [
            format(fit.slope, ".12g"),
            format(fit.intercept, ".12g"),
            fit.window[0],
            fit.window[1],
            format(fit.residual, ".6e"),
            format(fit.ratio_spread, ".6g"),
            fit.n_points,
        ]
    )
    return buf.getvalue()
