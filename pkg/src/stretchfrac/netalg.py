"""Resistor networks: Laplacians, traces onto vertex subsets, effective resistance.

Infinite resistances are open circuits: they carry zero conductance and never
enter a Laplacian. Zero resistances are shorts: their endpoints are fused into
one node before any solve. Parallel edges merge by adding conductances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

#: interiors up to this size are solved with a dense Cholesky factorisation
DENSE_MAX = 3000


class FloatingComponentError(np.linalg.LinAlgError):
    """An interior component has no finite-resistance path to the boundary."""

    def __init__(self, vertices):
        self.vertices = np.asarray(vertices)
        shown = ", ".join(str(v) for v in self.vertices[:10])
        more = "" if len(self.vertices) <= 10 else f", ... ({len(self.vertices)} vertices)"
        super().__init__(f"floating interior component without path to boundary: [{shown}{more}]")


@dataclass(frozen=True)
class ResistorNetwork:
    n_vertices: int
    u: np.ndarray
    v: np.ndarray
    resistance: np.ndarray

    @classmethod
    def from_edges(cls, n_vertices: int, edges) -> ResistorNetwork:
        """``edges`` is an iterable of ``(u, v, resistance)``."""
        edges = list(edges)
        if not edges:
            z = np.zeros(0, dtype=np.int64)
            return cls(n_vertices, z, z, np.zeros(0))
        u, v, r = zip(*edges)
        return cls(n_vertices, np.asarray(u, np.int64), np.asarray(v, np.int64), np.asarray(r, float))

    @classmethod
    def from_graph(cls, g) -> ResistorNetwork:
        return cls(g.n_vertices, g.edge_u, g.edge_v, g.resistance)

    @classmethod
    def from_laplacian(cls, L) -> ResistorNetwork:
        """Network whose conductances are the negated off-diagonal entries of ``L``."""
        L = np.asarray(L.toarray() if sp.issparse(L) else L, dtype=float)
        iu, ju = np.triu_indices(L.shape[0], k=1)
        c = -L[iu, ju]
        keep = c > 0
        return cls(L.shape[0], iu[keep], ju[keep], 1.0 / c[keep])

    @property
    def conductance(self) -> np.ndarray:
        if np.any(self.resistance == 0):
            raise ValueError("network has shorted edges; contract it first")
        with np.errstate(divide="ignore"):
            return np.where(np.isinf(self.resistance), 0.0, 1.0 / self.resistance)

    @property
    def has_shorts(self) -> bool:
        return bool(np.any(self.resistance == 0))

    def contracted(self) -> tuple[ResistorNetwork, np.ndarray]:
        """Fuse the endpoints of zero-resistance edges.

        Returns the reduced network and the node label of every original vertex.
        """
        short = self.resistance == 0
        if not short.any():
            return self, np.arange(self.n_vertices)
        A = sp.coo_matrix((np.ones(short.sum()), (self.u[short], self.v[short])), shape=(self.n_vertices,) * 2)
        n, labels = connected_components(A, directed=False)
        keep = ~short & (labels[self.u] != labels[self.v])
        return ResistorNetwork(n, labels[self.u[keep]], labels[self.v[keep]], self.resistance[keep]), labels

    def laplacian(self) -> sp.csr_matrix:
        c = self.conductance
        keep = c > 0
        u, v, c = self.u[keep], self.v[keep], c[keep]
        n = self.n_vertices
        W = sp.coo_matrix((np.concatenate([c, c]), (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))
        W = W.tocsr()
        deg = np.asarray(W.sum(axis=1)).ravel()
        return (sp.diags(deg) - W).tocsr()

    def components(self) -> np.ndarray:
        """Component label of every vertex in the finite-resistance subgraph."""
        L = self.laplacian()
        return connected_components(L, directed=False)[1]


def _as_network(net) -> ResistorNetwork:
    if isinstance(net, ResistorNetwork):
        return net
    if hasattr(net, "edge_u"):
        return ResistorNetwork.from_graph(net)
    raise TypeError(f"expected a ResistorNetwork or StretchedGraph, got {type(net).__name__}")


def _fused(net: ResistorNetwork, B) -> tuple[ResistorNetwork, np.ndarray]:
    """Contract shorts and map ``B``; shorted boundary vertices are an error."""
    red, labels = net.contracted()
    B = labels[np.asarray(B, dtype=np.int64)]
    if len(np.unique(B)) != len(B):
        raise ValueError("two boundary vertices are joined by zero-resistance edges")
    return red, B


def _interior(n: int, B) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[B] = False
    return np.flatnonzero(mask)


def _check_floating(net: ResistorNetwork, B: np.ndarray) -> None:
    labels = net.components()
    touched = np.unique(labels[B])
    floating = ~np.isin(labels, touched)
    if floating.any():
        raise FloatingComponentError(np.flatnonzero(floating))


class _Solver:
    """Factorisation of a symmetric positive definite block, dense or sparse."""

    def __init__(self, A: sp.spmatrix, dense_max: int = DENSE_MAX):
        self.n = A.shape[0]
        if self.n <= dense_max:
            self._cho = sla.cho_factor(A.toarray(), lower=True)
            self._lu = None
        else:
            self._cho = None
            self._lu = splu(A.tocsc())

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return np.zeros_like(b, dtype=float)
        if self._cho is not None:
            return sla.cho_solve(self._cho, b)
        return self._lu.solve(np.asarray(b, dtype=float))


def schur_complement(net, B, dense_max: int = DENSE_MAX) -> np.ndarray:
    """Dense Laplacian ``L_BB - L_BI L_II^{-1} L_IB`` of the trace onto ``B``."""
    net = _as_network(net)
    B = np.asarray(B, dtype=np.int64)
    if len(B) == 0:
        raise ValueError("boundary set must be nonempty")
    if len(np.unique(B)) != len(B):
        raise ValueError("boundary set has repeated vertices")
    net, B = _fused(net, B)
    _check_floating(net, B)
    L = net.laplacian()
    I = _interior(net.n_vertices, B)
    L_BB = L[B][:, B].toarray()
    if len(I) == 0:
        return L_BB
    L_IB = L[I][:, B].toarray()
    X = _Solver(L[I][:, I], dense_max).solve(L_IB)
    S = L_BB - L_IB.T @ X
    return 0.5 * (S + S.T)


def trace_to(net, B, dense_max: int = DENSE_MAX) -> ResistorNetwork:
    """Network on ``B`` (vertex ``i`` is ``B[i]``) equivalent to ``net`` seen from ``B``."""
    B = np.asarray(B, dtype=np.int64)
    n = _as_network(net).n_vertices
    if len(B) >= n:
        raise ValueError("boundary set must be a proper subset")
    return ResistorNetwork.from_laplacian(schur_complement(net, B, dense_max))


def network_energy(net, values) -> float:
    """``sum (u(x) - u(y))**2 / r(x, y)`` over finite-resistance edges."""
    net = _as_network(net)
    values = np.asarray(values, dtype=float)
    d = values[net.u] - values[net.v]
    finite = net.resistance > 0
    if np.any(d[~finite] != 0):
        return float("inf")
    c = np.where(np.isinf(net.resistance[finite]), 0.0, 1.0 / net.resistance[finite])
    return float(np.sum(c * d[finite] ** 2))


def harmonic_extension(net, B, boundary_values, dense_max: int = DENSE_MAX) -> np.ndarray:
    """Energy-minimising extension of ``boundary_values`` given on ``B``."""
    net = _as_network(net)
    B = np.asarray(B, dtype=np.int64)
    g = np.asarray(boundary_values, dtype=float)
    red, labels = net.contracted()
    Br = labels[B]
    if len(np.unique(Br)) != len(Br):
        raise ValueError("two boundary vertices are joined by zero-resistance edges")
    u = np.zeros(red.n_vertices)
    u[Br] = g
    I = _interior(red.n_vertices, Br)
    if len(I) > 0:
        _check_floating(red, Br)
        L = red.laplacian()
        u[I] = _Solver(L[I][:, I], dense_max).solve(-(L[I][:, Br] @ g))
    return u[labels]


def effective_resistance(net, p: int, q: int, dense_max: int = DENSE_MAX) -> float:
    """Effective resistance between ``p`` and ``q``; ``inf`` if they are not connected."""
    net = _as_network(net)
    if p == q:
        raise ValueError("effective resistance needs two distinct vertices")
    net, fuse = net.contracted()
    p, q = int(fuse[p]), int(fuse[q])
    if p == q:
        return 0.0
    labels = net.components()
    if labels[p] != labels[q]:
        return float("inf")
    comp = np.flatnonzero(labels == labels[p])
    keep = comp[comp != q]
    L = net.laplacian()
    b = np.zeros(len(keep))
    b[np.searchsorted(keep, p)] = 1.0
    x = _Solver(L[keep][:, keep], dense_max).solve(b)
    return float(x[np.searchsorted(keep, p)])


def resistance_matrix(net, vertices=None, dense_max: int = DENSE_MAX) -> np.ndarray:
    """Pairwise effective resistances among ``vertices`` (all vertices by default)."""
    net = _as_network(net)
    if vertices is None:
        S = net.laplacian().toarray()
    else:
        vertices = np.asarray(vertices, dtype=np.int64)
        S = schur_complement(net, vertices, dense_max) if len(vertices) < net.n_vertices else net.laplacian().toarray()
    n = S.shape[0]
    if n == 1:
        return np.zeros((1, 1))
    G = np.zeros_like(S)
    G[1:, 1:] = np.linalg.inv(S[1:, 1:])
    d = np.diag(G)
    R = d[:, None] + d[None, :] - 2 * G
    np.fill_diagonal(R, 0.0)
    return R


class GroundedSolver:
    """Reusable factorisation of a connected network grounded at one vertex.

    ``block(idx)`` returns the Green's function entries needed to evaluate
    effective resistances ``G_aa + G_bb - 2 G_ab`` for vertices in ``idx``.
    """

    def __init__(self, net, ground: int = 0, dense_max: int = DENSE_MAX):
        net, self._fuse = _as_network(net).contracted()
        ground = int(self._fuse[ground])
        labels = net.components()
        if len(np.unique(labels)) != 1:
            raise FloatingComponentError(np.flatnonzero(labels != labels[ground]))
        self.n = len(self._fuse)
        self.ground = ground
        self.keep = _interior(net.n_vertices, [ground])
        L = net.laplacian()
        self._solver = _Solver(L[self.keep][:, self.keep], dense_max)
        pos = np.full(net.n_vertices, -1, dtype=np.int64)
        pos[self.keep] = np.arange(len(self.keep))
        self._pos = pos[self._fuse]

    def block(self, idx) -> np.ndarray:
        """Green's function restricted to ``idx x idx``."""
        idx = np.asarray(idx, dtype=np.int64)
        rhs = np.zeros((len(self.keep), len(idx)))
        cols = self._pos[idx]
        valid = cols >= 0
        rhs[cols[valid], np.flatnonzero(valid)] = 1.0
        X = self._solver.solve(rhs)
        G = np.zeros((len(idx), len(idx)))
        rows = self._pos[idx]
        G[valid] = X[rows[valid]]
        return G

    def resistances(self, idx) -> np.ndarray:
        G = self.block(idx)
        d = np.diag(G)
        R = d[:, None] + d[None, :] - 2 * G
        np.fill_diagonal(R, 0.0)
        return R
