"""Combinatorial templates of stretchable p.c.f. self-similar fractals.

A template records everything the graph approximation needs: the alphabet
size, the boundary (post-critical) labels, the level-0 network, and for each
critical point the words and boundary labels whose images meet there.
Geometry is optional metadata used for Euclidean dimensions and plotting.

Letters of the alphabet are ``1..N``; boundary labels are ``0..B-1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components


class TemplateError(ValueError):
    """Raised for unknown builtins and for template files that fail validation."""


@dataclass(frozen=True)
class LambdaExpr:
    """Resistance ``c0 + c1*lam + c2*lam**2`` for lambda-dependent level-0 edges."""

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    def __call__(self, lam: float) -> float:
        return self.c0 + self.c1 * lam + self.c2 * lam * lam


@dataclass(frozen=True)
class E0Edge:
    u: int
    v: int
    r0: float | LambdaExpr = 1.0

    def resistance(self, lam: float | None = None) -> float:
        if isinstance(self.r0, LambdaExpr):
            if lam is None:
                raise ValueError("edge resistance depends on lambda; pass lam")
            return float(self.r0(lam))
        return float(self.r0)


@dataclass(frozen=True)
class Attachment:
    """One slot ``(c, l)``: the image of boundary label ``target`` under ``word`` is ``c``."""

    word: tuple[int, ...]
    target: int
    rho_class: int = 0


@dataclass(frozen=True)
class CriticalPoint:
    id: str
    attachments: tuple[Attachment, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.attachments)


@dataclass(frozen=True)
class Alias:
    """Boundary label ``label`` is the image of boundary label ``target`` under ``word``."""

    label: int
    word: tuple[int, ...]
    target: int


@dataclass(frozen=True)
class Embedding:
    """Coordinates of the boundary and affine similitudes ``F_i(x) = A_i x + b_i``."""

    boundary: np.ndarray
    matrices: tuple[np.ndarray, ...]
    offsets: tuple[np.ndarray, ...]

    def fixed_point(self, i: int) -> np.ndarray:
        A, b = self.matrices[i - 1], self.offsets[i - 1]
        return np.linalg.solve(np.eye(len(b)) - A, b)

    def stretched_map(self, i: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
        """Affine data of ``G_i = alpha*(F_i - q_i) + q_i``."""
        A, b = self.matrices[i - 1], self.offsets[i - 1]
        q = self.fixed_point(i)
        return alpha * A, alpha * b + (1.0 - alpha) * q

    def apply(self, word, x, alpha: float = 1.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        for i in reversed(tuple(word)):
            A, b = self.stretched_map(i, alpha)
            x = A @ x + b
        return x


@dataclass(frozen=True)
class FractalTemplate:
    name: str
    N: int
    boundary_size: int
    fixed_point_of: dict[int, int]
    e0_edges: tuple[E0Edge, ...]
    critical_points: tuple[CriticalPoint, ...]
    aliases: tuple[Alias, ...] = ()
    line_share: float = 0.5
    contraction_ratios: tuple[float, ...] | None = None
    embedding: Embedding | None = field(default=None, compare=False)
    description: str = ""

    # -- derived data -------------------------------------------------------

    @property
    def slots(self) -> list[tuple[int, int, Attachment]]:
        """All attachment slots ``(critical index, l, attachment)`` in canonical order."""
        return [
            (ci, l, a)
            for ci, cp in enumerate(self.critical_points)
            for l, a in enumerate(cp.attachments)
        ]

    @property
    def n_slots(self) -> int:
        return sum(cp.multiplicity for cp in self.critical_points)

    @property
    def n_rho_classes(self) -> int:
        return 1 + max((a.rho_class for _, _, a in self.slots), default=0)

    @property
    def max_word_length(self) -> int:
        return max((len(a.word) for _, _, a in self.slots), default=1)

    @property
    def depends_on_lambda(self) -> bool:
        return any(isinstance(e.r0, LambdaExpr) for e in self.e0_edges)

    def r0(self, lam: float | None = None) -> np.ndarray:
        """Resolved level-0 resistances, ``inf`` for open edges."""
        return np.array([e.resistance(lam) for e in self.e0_edges], dtype=float)

    def with_r0(self, values) -> FractalTemplate:
        edges = tuple(E0Edge(e.u, e.v, float(r)) for e, r in zip(self.e0_edges, values))
        return _replace(self, e0_edges=edges)

    # -- word canonicalisation -------------------------------------------------

    def canonical_suffix(self, word: tuple[int, ...], label: int, length: int):
        """Rewrite the point ``(word, label)`` as an equal point with a word of ``length``.

        Fixed points extend by repeating their letter and aliases unfold into
        their defining word. Trailing letters are folded back when the word is
        too long. Returns ``None`` if no such representation exists without
        touching letters before ``word``.
        """
        word = tuple(word)
        # fold to the shortest representation first
        changed = True
        while changed and word:
            changed = False
            fixed = self.fixed_point_of.get(label)
            if fixed is not None and word[-1] == fixed:
                word = word[:-1]
                changed = True
                continue
            for al in self.aliases:
                k = len(al.word)
                if al.target == label and k <= len(word) and word[len(word) - k:] == al.word:
                    word = word[: len(word) - k]
                    label = al.label
                    changed = True
                    break
        if len(word) > length:
            return None
        seen = set()
        while len(word) < length:
            fixed = self.fixed_point_of.get(label)
            if fixed is not None:
                word = word + (fixed,) * (length - len(word))
                break
            al = self._alias_of(label)
            if al is None or label in seen:
                return None
            seen.add(label)
            word = word + al.word
            label = al.target
        if len(word) != length:
            return None
        return word, label

    def _alias_of(self, label: int) -> Alias | None:
        for al in self.aliases:
            if al.label == label:
                return al
        return None

    def summary(self) -> dict:
        return {
            "name": self.name,
            "N": self.N,
            "boundary": self.boundary_size,
            "critical_points": len(self.critical_points),
            "multiplicities": [cp.multiplicity for cp in self.critical_points],
            "e0_edges": len(self.e0_edges),
            "lambda_dependent_r0": self.depends_on_lambda,
        }


def _replace(t: FractalTemplate, **changes) -> FractalTemplate:
    from dataclasses import replace

    return replace(t, **changes)


# -- validation ---------------------------------------------------------------


def validate_template(t: FractalTemplate) -> list[str]:
    """List every violated invariant; an empty list means the template is stretchable."""
    report: list[str] = []
    B, N = t.boundary_size, t.N
    if N < 2:
        report.append("alphabet size N < 2")
    if B < 2:
        report.append("boundary size < 2")

    for label, letter in t.fixed_point_of.items():
        if not 0 <= label < B:
            report.append(f"fixed point label {label} out of range")
        if not 1 <= letter <= N:
            report.append(f"fixed point letter {letter} out of range")
    if len(set(t.fixed_point_of.values())) != len(t.fixed_point_of):
        report.append("two boundary labels claim the same similitude as fixed point")

    alias_labels = {al.label for al in t.aliases}
    for al in t.aliases:
        if al.label in t.fixed_point_of:
            report.append(f"alias label {al.label} is also a fixed point")
        if not al.word or any(not 1 <= x <= N for x in al.word):
            report.append(f"alias of label {al.label} has an invalid word")
    for label in range(B):
        if label not in t.fixed_point_of and label not in alias_labels:
            report.append(f"boundary label {label} is neither a fixed point nor an image of one (C1)")

    for e in t.e0_edges:
        if not (0 <= e.u < B and 0 <= e.v < B) or e.u == e.v:
            report.append(f"E0 edge ({e.u},{e.v}) invalid")
        if isinstance(e.r0, LambdaExpr):
            continue
        if not e.r0 > 0:
            report.append(f"E0 edge ({e.u},{e.v}) has non-positive resistance")

    if not t.critical_points:
        report.append("no critical points")
    for cp in t.critical_points:
        if cp.multiplicity < 2:
            report.append(f"critical point {cp.id}: multiplicity < 2")
        firsts = [a.word[0] for a in cp.attachments if a.word]
        if len(set(firsts)) != len(firsts):
            report.append(f"critical point {cp.id}: first letters of attachment words not distinct")
        for a in cp.attachments:
            if not a.word or any(not 1 <= x <= N for x in a.word):
                report.append(f"critical point {cp.id}: invalid attachment word {a.word}")
            if not 0 <= a.target < B:
                report.append(f"critical point {cp.id}: attachment target {a.target} is not a boundary label")
            elif a.target not in t.fixed_point_of:
                report.append(f"critical point {cp.id}: attachment target {a.target} is not a fixed point")
            if a.rho_class < 0:
                report.append(f"critical point {cp.id}: negative rho class")

    if not 0 < t.line_share <= 1:
        report.append("line_share outside (0, 1]")
    if t.contraction_ratios is not None:
        if len(t.contraction_ratios) != N or any(not 0 < r < 1 for r in t.contraction_ratios):
            report.append("contraction ratios must be N values in (0, 1)")

    if report:
        return report

    # C2: no critical point may coincide with a boundary point
    L = t.max_word_length
    boundary_keys = {t.canonical_suffix((), b, L) for b in range(B)}
    for cp in t.critical_points:
        for a in cp.attachments:
            key = t.canonical_suffix(a.word, a.target, L)
            if key is None:
                report.append(f"critical point {cp.id}: attachment cannot be resolved")
            elif key in boundary_keys:
                report.append(f"critical point {cp.id} coincides with a boundary point (C2)")

    lam_probe = 0.5
    finite = [(e.u, e.v) for e in t.e0_edges if math.isfinite(e.resistance(lam_probe))]
    if _n_components(B, finite) != 1:
        report.append("E0 network disconnected")
    return report


def _n_components(n: int, edges) -> int:
    from scipy.sparse import coo_matrix

    if not edges:
        return n
    u, v = np.array(edges).T
    A = coo_matrix((np.ones(len(u)), (u, v)), shape=(n, n))
    return connected_components(A, directed=False)[0]


# -- builtins ---------------------------------------------------------------


def _complete_graph(B: int, r0: float = 1.0) -> tuple[E0Edge, ...]:
    return tuple(E0Edge(u, v, r0) for u, v in combinations(range(B), 2))


def _gasket(d: int, name: str) -> FractalTemplate:
    B = d + 1
    cps = tuple(
        CriticalPoint(f"c{i}{j}", (Attachment((i + 1,), j), Attachment((j + 1,), i)))
        for i, j in combinations(range(B), 2)
    )
    if d == 2:
        boundary = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    else:
        boundary = np.eye(B)
    dim = boundary.shape[1]
    emb = Embedding(
        boundary,
        tuple(0.5 * np.eye(dim) for _ in range(B)),
        tuple(0.5 * boundary[i] for i in range(B)),
    )
    return FractalTemplate(
        name=name,
        N=B,
        boundary_size=B,
        fixed_point_of={i: i + 1 for i in range(B)},
        e0_edges=_complete_graph(B),
        critical_points=cps,
        contraction_ratios=(0.5,) * B,
        embedding=emb,
        description=f"Sierpinski gasket in dimension {d}",
    )


def _sierpinski_level3() -> FractalTemplate:
    # cells are the six upward triangles of the 1/3 lattice, keyed by base point
    bases = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)]
    letter = {b: k + 1 for k, b in enumerate(bases)}
    corners: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for (i, j) in bases:
        for label, p in enumerate([(i, j), (i + 1, j), (i, j + 1)]):
            corners.setdefault(p, []).append((letter[(i, j)], label))
    fixed = {0: letter[(0, 0)], 1: letter[(2, 0)], 2: letter[(0, 2)]}
    cps = []
    for p in sorted(corners):
        owners = corners[p]
        if len(owners) < 2:
            continue
        cps.append(
            CriticalPoint(f"c{p[0]}{p[1]}", tuple(Attachment((w,), lab) for w, lab in owners))
        )
    A, Bp, C = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([0.5, math.sqrt(3) / 2])
    emb = Embedding(
        np.array([A, Bp, C]),
        tuple(np.eye(2) / 3 for _ in bases),
        tuple((i * Bp + j * C) / 3 for (i, j) in bases),
    )
    return FractalTemplate(
        name="sierpinski_level3",
        N=6,
        boundary_size=3,
        fixed_point_of=fixed,
        e0_edges=_complete_graph(3),
        critical_points=tuple(cps),
        contraction_ratios=(1 / 3,) * 6,
        embedding=emb,
        description="level 3 Sierpinski gasket",
    )


def _vicsek() -> FractalTemplate:
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    cps = tuple(
        CriticalPoint(f"c{k}", (Attachment((k + 1,), (k + 2) % 4), Attachment((5,), k)))
        for k in range(4)
    )
    offsets = tuple(2 * square[k] / 3 for k in range(4)) + (np.array([1 / 3, 1 / 3]),)
    emb = Embedding(square, tuple(np.eye(2) / 3 for _ in range(5)), offsets)
    return FractalTemplate(
        name="vicsek",
        N=5,
        boundary_size=4,
        fixed_point_of={k: k + 1 for k in range(4)},
        e0_edges=_complete_graph(4),
        critical_points=cps,
        contraction_ratios=(1 / 3,) * 5,
        embedding=emb,
        description="Vicsek set",
    )


def _lindstrom() -> FractalTemplate:
    hexagon = np.array([[math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)] for k in range(6)])
    cps = []
    for j in range(6):
        # outer cell j+1 meets the centre cell
        cps.append(CriticalPoint(f"o{j}", (Attachment((j + 1,), (j + 3) % 6), Attachment((7,), j))))
    for j in range(6):
        # neighbouring outer cells j+1 and j+2
        cps.append(
            CriticalPoint(
                f"n{j}",
                (Attachment((j + 1,), (j + 2) % 6), Attachment(((j + 1) % 6 + 1,), (j - 1) % 6)),
            )
        )
    offsets = tuple(2 * hexagon[k] / 3 for k in range(6)) + (np.zeros(2),)
    emb = Embedding(hexagon, tuple(np.eye(2) / 3 for _ in range(7)), offsets)
    return FractalTemplate(
        name="lindstrom",
        N=7,
        boundary_size=6,
        fixed_point_of={k: k + 1 for k in range(6)},
        e0_edges=_complete_graph(6),
        critical_points=tuple(cps),
        contraction_ratios=(1 / 3,) * 7,
        embedding=emb,
        description="Lindstrom snowflake (no reference harmonic structure)",
    )


def _hata() -> FractalTemplate:
    s12 = math.sqrt(12.0)
    A1 = np.array([[math.sqrt(3), 1.0], [1.0, -math.sqrt(3)]]) / s12
    A2 = np.array([[2 / 3, 0.0], [0.0, -2 / 3]])
    boundary = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1 / s12]])
    emb = Embedding(boundary, (A1, A2), (np.zeros(2), np.array([1 / 3, 0.0])))
    cp = CriticalPoint("c", (Attachment((2,), 0), Attachment((1, 1), 1)))
    return FractalTemplate(
        name="hata",
        N=2,
        boundary_size=3,
        fixed_point_of={0: 1, 1: 2},
        # label 2 is the post-critical point G_1(q_2)
        aliases=(Alias(2, (1,), 1),),
        e0_edges=(
            E0Edge(0, 1, 1.0),
            E0Edge(0, 2, LambdaExpr(0.0, 1.0, 0.0)),
            E0Edge(1, 2, math.inf),
        ),
        critical_points=(cp,),
        contraction_ratios=(1 / math.sqrt(3), 2 / 3),
        embedding=emb,
        description="Hata's tree; r0 on the (0,2) edge equals lambda",
    )


BUILTIN_NAMES = ("sierpinski3", "sierpinski_level3", "gasket_d", "vicsek", "lindstrom", "hata")


def builtin(name: str, d: int | None = None) -> FractalTemplate:
    """Return a validated builtin template.

    ``gasket_d`` takes the dimension either as ``d`` or in the name, e.g.
    ``"gasket_3"`` or ``"gasket_d(3)"``.
    """
    key = name.strip().lower()
    if key.startswith("gasket"):
        if d is None:
            digits = "".join(ch for ch in key[len("gasket"):] if ch.isdigit())
            if not digits:
                raise TemplateError("gasket_d needs a dimension, e.g. gasket_3")
            d = int(digits)
        if d < 2:
            raise TemplateError(f"gasket_d requires d >= 2, got {d}")
        t = _gasket(d, f"gasket_{d}")
    elif key == "sierpinski3":
        t = _gasket(2, "sierpinski3")
    elif key == "sierpinski_level3":
        t = _sierpinski_level3()
    elif key == "vicsek":
        t = _vicsek()
    elif key == "lindstrom":
        t = _lindstrom()
    elif key == "hata":
        t = _hata()
    else:
        raise TemplateError(f"unknown template {name!r}; builtins: {', '.join(BUILTIN_NAMES)}")
    problems = validate_template(t)
    if problems:  # pragma: no cover - builtins are checked by the test suite
        raise TemplateError(f"builtin {name} invalid: {problems}")
    return t


def resolve(name_or_path: str) -> FractalTemplate:
    """Builtin name or path to a template file."""
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        return load_template(p)
    return builtin(name_or_path)


# -- file format --------------------------------------------------------------


def _r0_to_json(r0):
    if isinstance(r0, LambdaExpr):
        return {"lambda": [r0.c0, r0.c1, r0.c2]}
    if math.isinf(r0):
        return "inf"
    return r0


def _r0_from_json(x):
    if isinstance(x, dict):
        return LambdaExpr(*[float(c) for c in x["lambda"]])
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinite"):
            return math.inf
        return float(x)
    return float(x)


def template_to_dict(t: FractalTemplate) -> dict:
    d = {
        "name": t.name,
        "N": t.N,
        "boundary_size": t.boundary_size,
        "fixed_point_of": {str(k): v for k, v in sorted(t.fixed_point_of.items())},
        "aliases": [{"label": a.label, "word": list(a.word), "target": a.target} for a in t.aliases],
        "e0_edges": [{"u": e.u, "v": e.v, "r0": _r0_to_json(e.r0)} for e in t.e0_edges],
        "critical_points": [
            {
                "id": cp.id,
                "attachments": [
                    {"word": list(a.word), "target": a.target, "rho_class": a.rho_class}
                    for a in cp.attachments
                ],
            }
            for cp in t.critical_points
        ],
        "line_share": t.line_share,
        "description": t.description,
    }
    if t.contraction_ratios is not None:
        d["contraction_ratios"] = list(t.contraction_ratios)
    if t.embedding is not None:
        d["embedding"] = {
            "boundary": t.embedding.boundary.tolist(),
            "maps": [
                {"matrix": A.tolist(), "offset": b.tolist()}
                for A, b in zip(t.embedding.matrices, t.embedding.offsets)
            ],
        }
    return d


def template_from_dict(d: dict) -> FractalTemplate:
    try:
        emb = None
        if d.get("embedding"):
            e = d["embedding"]
            emb = Embedding(
                np.array(e["boundary"], dtype=float),
                tuple(np.array(m["matrix"], dtype=float) for m in e["maps"]),
                tuple(np.array(m["offset"], dtype=float) for m in e["maps"]),
            )
        ratios = d.get("contraction_ratios")
        return FractalTemplate(
            name=str(d["name"]),
            N=int(d["N"]),
            boundary_size=int(d["boundary_size"]),
            fixed_point_of={int(k): int(v) for k, v in d["fixed_point_of"].items()},
            e0_edges=tuple(
                E0Edge(int(e["u"]), int(e["v"]), _r0_from_json(e.get("r0", 1.0))) for e in d["e0_edges"]
            ),
            critical_points=tuple(
                CriticalPoint(
                    str(cp["id"]),
                    tuple(
                        Attachment(tuple(int(x) for x in a["word"]), int(a["target"]), int(a.get("rho_class", 0)))
                        for a in cp["attachments"]
                    ),
                )
                for cp in d["critical_points"]
            ),
            aliases=tuple(
                Alias(int(a["label"]), tuple(int(x) for x in a["word"]), int(a["target"]))
                for a in d.get("aliases", [])
            ),
            line_share=float(d.get("line_share", 0.5)),
            contraction_ratios=tuple(float(r) for r in ratios) if ratios is not None else None,
            embedding=emb,
            description=str(d.get("description", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TemplateError(f"malformed template: {exc}") from exc


def dumps_template(t: FractalTemplate) -> str:
    return json.dumps(template_to_dict(t), indent=2, sort_keys=False) + "\n"


def save_template(t: FractalTemplate, path) -> None:
    Path(path).write_text(dumps_template(t))


def load_template(path) -> FractalTemplate:
    """Read a template file; files failing validation are rejected."""
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise TemplateError(f"cannot read template {path}: {exc}") from exc
    t = template_from_dict(d)
    problems = validate_template(t)
    if problems:
        raise TemplateError(f"template {path} failed validation: " + "; ".join(problems))
    return t
