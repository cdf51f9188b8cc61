"""Level-n approximating networks of a stretched fractal.

Vertices are stored as integer ids in three contiguous blocks:

* cell vertices ``(w, label)`` for words ``w`` of length ``n``, id ``idx(w)*B + label``;
* critical vertices ``(w, c)`` for ``|w| = k-1``, grouped by generation ``k``;
* interior points of subdivided connecting lines.

A word of length ``m`` is indexed by reading its letters ``1..N`` as base-``N``
digits ``0..N-1``, most significant first.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .templates import FractalTemplate

FRACTAL, CONNECTING = 0, 1


class GraphError(ValueError):
    """Raised when a level cannot be built for the requested template and sequence."""


def word_index(word, N: int) -> int:
    idx = 0
    for letter in word:
        idx = idx * N + (letter - 1)
    return idx


def index_word(idx: int, length: int, N: int) -> tuple[int, ...]:
    letters = []
    for _ in range(length):
        idx, r = divmod(idx, N)
        letters.append(r + 1)
    return tuple(reversed(letters))


def _geom(N: int, k: int) -> int:
    """``1 + N + ... + N**(k-1)``, the number of words of length < k."""
    return (N**k - 1) // (N - 1)


@dataclass
class StretchedGraph:
    template: FractalTemplate
    level: int
    subdivision: int
    lambdas: np.ndarray
    rhos: np.ndarray
    r0: np.ndarray
    n_vertices: int
    # edges
    edge_u: np.ndarray
    edge_v: np.ndarray
    resistance: np.ndarray
    edge_kind: np.ndarray
    edge_generation: np.ndarray
    edge_line: np.ndarray
    edge_segment: np.ndarray
    # connecting lines
    line_generation: np.ndarray
    line_owner: np.ndarray
    line_slot: np.ndarray
    line_critical: np.ndarray
    line_anchor: np.ndarray
    line_resistance: np.ndarray
    _keys: list | None = field(default=None, repr=False)

    # -- sizes ------------------------------------------------------------------

    @property
    def N(self) -> int:
        return self.template.N

    @property
    def B(self) -> int:
        return self.template.boundary_size

    @property
    def n_cell_vertices(self) -> int:
        return self.N**self.level * self.B

    @property
    def n_critical_vertices(self) -> int:
        return len(self.template.critical_points) * _geom(self.N, self.level)

    @property
    def n_lines(self) -> int:
        return len(self.line_generation)

    @property
    def n_fractal_edges(self) -> int:
        return int(np.count_nonzero(self.edge_kind == FRACTAL))

    @property
    def n_connecting_edges(self) -> int:
        return int(np.count_nonzero(self.edge_kind == CONNECTING))

    @property
    def delta(self) -> float:
        return float(np.prod(self.lambdas[: self.level]))

    def critical_offset(self, k: int) -> int:
        return self.n_cell_vertices + len(self.template.critical_points) * _geom(self.N, k - 1)

    @property
    def interior_offset(self) -> int:
        return self.n_cell_vertices + self.n_critical_vertices

    # -- vertex lookup ------------------------------------------------------------

    def cell_vertices(self, m: int) -> np.ndarray:
        """Vertex ids of the boundary points of every level-``m`` cell, shape ``(N**m, B)``."""
        if not 0 <= m <= self.level:
            raise ValueError(f"cell level {m} outside 0..{self.level}")
        t, N, B = self.template, self.N, self.B
        slack = self.level - m
        base = np.arange(N**m, dtype=np.int64) * N**slack
        out = np.empty((N**m, B), dtype=np.int64)
        for label in range(B):
            suffix, q = t.canonical_suffix((), label, slack)
            out[:, label] = (base + word_index(suffix, N)) * B + q
        return out

    @property
    def boundary(self) -> np.ndarray:
        """Ids of the level-0 boundary points in label order."""
        return self.cell_vertices(0)[0]

    def vertex_kind(self) -> np.ndarray:
        kinds = np.full(self.n_vertices, 2, dtype=np.int8)
        kinds[: self.n_cell_vertices] = 0
        kinds[self.n_cell_vertices : self.interior_offset] = 1
        return kinds

    def key(self, i: int) -> tuple:
        """Canonical key of vertex ``i``.

        ``("P", word, label)``, ``("C", word, critical_id)`` or
        ``("L", word, critical_id, slot, segment)``.
        """
        t, N, B = self.template, self.N, self.B
        if i < self.n_cell_vertices:
            widx, label = divmod(i, B)
            return ("P", index_word(widx, self.level, N), label)
        if i < self.interior_offset:
            j = i - self.n_cell_vertices
            nc = len(t.critical_points)
            k = 1
            while j >= nc * N ** (k - 1):
                j -= nc * N ** (k - 1)
                k += 1
            widx, ci = divmod(j, nc)
            return ("C", index_word(widx, k - 1, N), t.critical_points[ci].id)
        j = i - self.interior_offset
        line, seg = divmod(j, self.subdivision - 1)
        ci, l, _ = t.slots[self.line_slot[line]]
        word = index_word(int(self.line_owner[line]), int(self.line_generation[line]) - 1, N)
        return ("L", word, t.critical_points[ci].id, l, seg + 1)

    def keys(self) -> list[tuple]:
        if self._keys is None:
            self._keys = [self.key(i) for i in range(self.n_vertices)]
        return self._keys

    def positions(self, alpha: float = 0.5) -> np.ndarray:
        """Euclidean coordinates of all vertices in the stretched embedding."""
        emb = self.template.embedding
        if emb is None:
            raise GraphError(f"template {self.template.name} carries no embedding")
        t = self.template
        dim = emb.boundary.shape[1]
        label_pt = {}
        for label in range(self.B):
            if label in t.fixed_point_of:
                label_pt[label] = emb.fixed_point(t.fixed_point_of[label])
            else:
                al = t._alias_of(label)
                label_pt[label] = emb.apply(al.word, emb.fixed_point(t.fixed_point_of[al.target]), alpha)
        crit_pt = []
        for cp in t.critical_points:
            a = cp.attachments[0]
            crit_pt.append(emb.apply(a.word, emb.fixed_point(t.fixed_point_of[a.target]), 1.0))
        pos = np.zeros((self.n_vertices, dim))
        for i in range(self.interior_offset):
            kind, word, tag = self.key(i)
            if kind == "P":
                pos[i] = emb.apply(word, label_pt[tag], alpha)
            else:
                ci = next(j for j, cp in enumerate(t.critical_points) if cp.id == tag)
                pos[i] = emb.apply(word, crit_pt[ci], alpha)
        s = self.subdivision
        for line in range(self.n_lines):
            a, b = pos[self.line_critical[line]], pos[self.line_anchor[line]]
            for seg in range(1, s):
                pos[self.interior_offset + line * (s - 1) + seg - 1] = a + (b - a) * seg / s
        return pos


def build_level(t: FractalTemplate, n: int, seq, s: int = 1) -> StretchedGraph:
    """Build the level-``n`` electrical network.

    ``seq`` supplies ``lambdas`` (length >= n), ``rhos`` (shape ``(>= n, classes)``)
    and the resolved level-0 resistances ``r0``. Each connecting line is split
    into ``s`` equal series segments.
    """
    if n < 1:
        raise GraphError("level must be >= 1")
    if s < 1:
        raise GraphError("subdivision must be >= 1")
    lambdas = np.asarray(seq.lambdas, dtype=float)
    rhos = np.atleast_2d(np.asarray(seq.rhos, dtype=float))
    if rhos.shape[0] == 1 and rhos.shape[1] != t.n_rho_classes and rhos.shape[1] >= n:
        rhos = rhos.T
    if len(lambdas) < n or rhos.shape[0] < n:
        raise GraphError(f"sequence provides {min(len(lambdas), rhos.shape[0])} entries, level {n} needs {n}")
    if rhos.shape[1] < t.n_rho_classes:
        raise GraphError(f"sequence has {rhos.shape[1]} rho classes, template needs {t.n_rho_classes}")
    r0 = np.asarray(seq.r0, dtype=float)
    if len(r0) != len(t.e0_edges):
        raise GraphError("resolved r0 does not match the template's E0 edges")

    N, B = t.N, t.boundary_size
    slots = t.slots
    S, nc = len(slots), len(t.critical_points)
    n_cells = N**n
    n_cell_v = n_cells * B
    n_crit_v = nc * _geom(N, n)
    n_lines = S * _geom(N, n)
    n_vertices = n_cell_v + n_crit_v + n_lines * (s - 1)
    delta = np.cumprod(lambdas[:n])
    gamma = np.concatenate(([1.0], delta[:-1]))

    # fractal edges
    widx = np.arange(n_cells, dtype=np.int64)
    eu = np.array([e.u for e in t.e0_edges], dtype=np.int64)
    ev = np.array([e.v for e in t.e0_edges], dtype=np.int64)
    f_u = (widx[:, None] * B + eu[None, :]).ravel()
    f_v = (widx[:, None] * B + ev[None, :]).ravel()
    f_r = np.broadcast_to(delta[-1] * r0, (n_cells, len(r0))).ravel().copy()

    # connecting lines
    l_gen, l_owner, l_slot, l_crit, l_anchor, l_res = [], [], [], [], [], []
    for k in range(1, n + 1):
        owners = np.arange(N ** (k - 1), dtype=np.int64)
        crit_base = n_cell_v + nc * _geom(N, k - 1)
        slack = n - (k - 1)
        for j, (ci, _, a) in enumerate(slots):
            crit = crit_base + owners * nc + ci
            canon = t.canonical_suffix(a.word, a.target, slack)
            if canon is not None:
                suffix, q = canon
                anchor = (owners * N**slack + word_index(suffix, N)) * B + q
            else:
                anchor = np.empty_like(owners)
                for o in owners:
                    w = index_word(int(o), k - 1, N)
                    full = t.canonical_suffix(w + a.word, a.target, n)
                    if full is None:
                        raise GraphError(
                            f"level {n} too small to resolve anchor {a.word}->{a.target} "
                            f"of generation {k} for template {t.name}"
                        )
                    anchor[o] = word_index(full[0], N) * B + full[1]
            l_gen.append(np.full(len(owners), k))
            l_owner.append(owners)
            l_slot.append(np.full(len(owners), j))
            l_crit.append(crit)
            l_anchor.append(anchor)
            l_res.append(np.full(len(owners), gamma[k - 1] * t.line_share * rhos[k - 1, a.rho_class]))
    # order lines by (generation, owner, slot)
    l_gen = np.concatenate(l_gen)
    l_owner = np.concatenate(l_owner)
    l_slot = np.concatenate(l_slot)
    order = np.lexsort((l_slot, l_owner, l_gen))
    l_gen, l_owner, l_slot = l_gen[order], l_owner[order], l_slot[order]
    l_crit = np.concatenate(l_crit)[order]
    l_anchor = np.concatenate(l_anchor)[order]
    l_res = np.concatenate(l_res)[order]

    # series segments crit -> p1 -> ... -> p_{s-1} -> anchor
    line_ids = np.arange(n_lines, dtype=np.int64)
    int_off = n_cell_v + n_crit_v
    if s == 1:
        c_u, c_v = l_crit, l_anchor
        c_seg = np.zeros(n_lines, dtype=np.int64)
        c_line = line_ids
    else:
        interior = int_off + line_ids[:, None] * (s - 1) + np.arange(s - 1)[None, :]
        chain = np.concatenate([l_crit[:, None], interior, l_anchor[:, None]], axis=1)
        c_u = chain[:, :-1].ravel()
        c_v = chain[:, 1:].ravel()
        c_seg = np.tile(np.arange(s), n_lines)
        c_line = np.repeat(line_ids, s)
    c_r = np.repeat(l_res / s, s)

    n_f = len(f_u)
    return StretchedGraph(
        template=t,
        level=n,
        subdivision=s,
        lambdas=lambdas[:n].copy(),
        rhos=rhos[:n].copy(),
        r0=r0.copy(),
        n_vertices=n_vertices,
        edge_u=np.concatenate([f_u, c_u]),
        edge_v=np.concatenate([f_v, c_v]),
        resistance=np.concatenate([f_r, c_r]),
        edge_kind=np.concatenate([np.zeros(n_f, np.int8), np.ones(len(c_u), np.int8)]),
        edge_generation=np.concatenate([np.full(n_f, n), np.repeat(l_gen, s)]),
        edge_line=np.concatenate([np.full(n_f, -1), c_line]),
        edge_segment=np.concatenate([np.zeros(n_f, np.int64), c_seg]),
        line_generation=l_gen,
        line_owner=l_owner,
        line_slot=l_slot,
        line_critical=l_crit,
        line_anchor=l_anchor,
        line_resistance=l_res,
    )


# -- export ---------------------------------------------------------------------


def _fmt_word(word) -> str:
    return ".".join(str(x) for x in word) or "()"


def format_key(key: tuple) -> str:
    if key[0] == "P":
        return f"P[{_fmt_word(key[1])}|{key[2]}]"
    if key[0] == "C":
        return f"C[{_fmt_word(key[1])}|{key[2]}]"
    return f"L[{_fmt_word(key[1])}|{key[2]}/{key[3]}|{key[4]}]"


def _fmt_float(x: float) -> str:
    return "inf" if np.isinf(x) else format(float(x), ".17g")


def _sorted_edges(g: StretchedGraph):
    keys = g.keys()
    rows = []
    for e in range(len(g.edge_u)):
        a, b = keys[g.edge_u[e]], keys[g.edge_v[e]]
        if b < a:
            a, b = b, a
        rows.append((a, b, e))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def export_graph(g: StretchedGraph, format: str = "csv") -> str:
    """Deterministic text export; ``csv`` columns are u_key, v_key, kind, generation, resistance."""
    if format not in ("csv", "dot"):
        raise ValueError(f"unknown export format {format!r}")
    rows = _sorted_edges(g)
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u_key", "v_key", "kind", "generation", "resistance"])
        for a, b, e in rows:
            kind = "fractal" if g.edge_kind[e] == FRACTAL else "connecting"
            w.writerow([format_key(a), format_key(b), kind, int(g.edge_generation[e]), _fmt_float(g.resistance[e])])
        return buf.getvalue()
    lines = [f'graph "{g.template.name}_n{g.level}" {{']
    for key in sorted(g.keys()):
        lines.append(f'  "{format_key(key)}";')
    for a, b, e in rows:
        style = "" if g.edge_kind[e] == FRACTAL else ", style=dashed"
        r = g.resistance[e]
        extra = ", style=dotted" if np.isinf(r) else style
        lines.append(f'  "{format_key(a)}" -- "{format_key(b)}" [label="{_fmt_float(r)}"{extra}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
