import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stretchfrac.graph import build_level
from stretchfrac.harmonic import Constant, make_sequence
from stretchfrac.netalg import (
    FloatingComponentError,
    GroundedSolver,
    ResistorNetwork,
    effective_resistance,
    harmonic_extension,
    network_energy,
    resistance_matrix,
    schur_complement,
    trace_to,
)
from stretchfrac.templates import builtin

SERIES = ResistorNetwork.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
TRIANGLE = ResistorNetwork.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


def test_series_trace():
    t = trace_to(SERIES, [0, 2])
    assert t.n_vertices == 2
    assert t.resistance.tolist() == pytest.approx([2.0])


def test_triangle_trace():
    t = trace_to(TRIANGLE, [0, 1])
    assert t.resistance[0] == pytest.approx(2 / 3)


def test_effective_resistance_examples():
    assert effective_resistance(SERIES, 0, 2) == pytest.approx(2.0)
    assert effective_resistance(TRIANGLE, 1, 2) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        effective_resistance(SERIES, 1, 1)
    split = ResistorNetwork.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert effective_resistance(split, 0, 3) == float("inf")


def test_harmonic_extension_examples():
    np.testing.assert_allclose(harmonic_extension(SERIES, [0, 2], [0.0, 1.0]), [0, 0.5, 1])
    star = ResistorNetwork.from_edges(
        4, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)]
    )
    u = harmonic_extension(star, [0, 1, 2], [1.0, 0.0, 0.0])
    assert u[3] == pytest.approx(1 / 3)
    np.testing.assert_allclose(harmonic_extension(SERIES, [0, 1, 2], [3.0, 2.0, 1.0]), [3, 2, 1])


def test_energy_examples():
    assert network_energy(SERIES, [1.0, 1.0, 1.0]) == 0.0
    assert network_energy(SERIES, [0.0, 0.5, 1.0]) == pytest.approx(0.5)


def test_floating_component_is_named():
    net = ResistorNetwork.from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)])
    with pytest.raises(FloatingComponentError) as exc:
        schur_complement(net, [0, 2])
    assert set(exc.value.vertices.tolist()) == {3, 4}


def test_open_edges_are_ignored():
    net = ResistorNetwork.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, np.inf)])
    assert effective_resistance(net, 0, 2) == pytest.approx(2.0)


def test_shorts_are_contracted():
    net = ResistorNetwork.from_edges(4, [(0, 1, 1.0), (1, 2, 0.0), (2, 3, 1.0)])
    assert effective_resistance(net, 0, 3) == pytest.approx(2.0)
    assert effective_resistance(net, 1, 2) == 0.0
    u = harmonic_extension(net, [0, 3], [0.0, 1.0])
    np.testing.assert_allclose(u, [0, 0.5, 0.5, 1])
    with pytest.raises(ValueError):
        schur_complement(net, [1, 2])


def test_sierpinski_level3_corners():
    t = builtin("sierpinski3")
    g = build_level(t, 3, make_sequence(t, Constant(0.3), 3), 2)
    for p, q in [(0, 1), (1, 2), (0, 2)]:
        assert effective_resistance(g, g.boundary[p], g.boundary[q]) == pytest.approx(2 / 3, abs=1e-12)


def test_sierpinski_level1_trace_is_unit_triangle():
    t = builtin("sierpinski3")
    g = build_level(t, 1, make_sequence(t, Constant(0.3, 0.5), 1), 2)
    S = schur_complement(g, g.boundary)
    np.testing.assert_allclose(S, TRIANGLE.laplacian().toarray(), atol=1e-10)


def test_dense_and_sparse_paths_agree():
    t = builtin("vicsek")
    g = build_level(t, 3, make_sequence(t, Constant(0.2), 3), 2)
    a = schur_complement(g, g.boundary)
    b = schur_complement(g, g.boundary, dense_max=10)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_grounded_solver_matches_direct():
    rng = np.random.default_rng(1)
    net = random_connected(rng, 12, 10)
    R = GroundedSolver(net, 3).resistances(np.arange(12))
    for p, q in [(0, 5), (2, 11), (7, 3)]:
        assert R[p, q] == pytest.approx(effective_resistance(net, p, q), rel=1e-12)
    np.testing.assert_allclose(R, resistance_matrix(net), rtol=1e-10, atol=1e-14)


# -- property tests ---------------------------------------------------------------


def random_connected(rng, n, extra):
    edges = [(int(rng.integers(0, i)), i, float(rng.uniform(0.1, 3.0))) for i in range(1, n)]
    for _ in range(extra):
        u, v = rng.choice(n, 2, replace=False)
        edges.append((int(u), int(v), float(rng.uniform(0.1, 3.0))))
    return ResistorNetwork.from_edges(n, edges)


nets = st.builds(
    lambda seed, n, extra: (np.random.default_rng(seed), n, extra),
    st.integers(0, 2**32 - 1),
    st.integers(4, 14),
    st.integers(0, 20),
)


@settings(max_examples=60, deadline=None)
@given(nets)
def test_schur_complement_is_a_laplacian(data):
    rng, n, extra = data
    net = random_connected(rng, n, extra)
    B = np.sort(rng.choice(n, int(rng.integers(2, n)), replace=False))
    S = schur_complement(net, B)
    np.testing.assert_allclose(S, S.T, atol=1e-12)
    np.testing.assert_allclose(S.sum(axis=1), 0, atol=1e-10)
    assert np.linalg.eigvalsh(S).min() > -1e-10


@settings(max_examples=60, deadline=None)
@given(nets)
def test_trace_idempotence_and_resistance_invariance(data):
    rng, n, extra = data
    net = random_connected(rng, n, extra)
    Bp = np.sort(rng.choice(n, int(rng.integers(3, n)), replace=False))
    sub = np.sort(rng.choice(len(Bp), 2 + int(rng.integers(0, len(Bp) - 2)), replace=False))
    if len(sub) == len(Bp):
        sub = sub[:-1]
    direct = schur_complement(net, Bp[sub])
    twice = schur_complement(trace_to(net, Bp), sub)
    np.testing.assert_allclose(direct, twice, atol=1e-10)
    R_full = resistance_matrix(net, Bp)
    R_tr = resistance_matrix(trace_to(net, Bp))
    np.testing.assert_allclose(R_full, R_tr, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(nets, st.floats(1.01, 10.0))
def test_rayleigh_monotonicity(data, factor):
    rng, n, extra = data
    net = random_connected(rng, n, extra)
    R0 = resistance_matrix(net)
    e = int(rng.integers(0, len(net.resistance)))
    r = net.resistance.copy()
    r[e] *= factor
    R1 = resistance_matrix(ResistorNetwork(net.n_vertices, net.u, net.v, r))
    assert np.all(R1 >= R0 - 1e-12)


@settings(max_examples=60, deadline=None)
@given(nets)
def test_extension_energy_equals_traced_form(data):
    rng, n, extra = data
    net = random_connected(rng, n, extra)
    B = np.sort(rng.choice(n, int(rng.integers(2, n)), replace=False))
    g = rng.normal(size=len(B))
    u = harmonic_extension(net, B, g)
    S = schur_complement(net, B)
    assert network_energy(net, u) == pytest.approx(g @ S @ g, rel=1e-12, abs=1e-12)
    L = net.laplacian().toarray()
    assert network_energy(net, u) == pytest.approx(u @ L @ u, rel=1e-12, abs=1e-12)
    # any other extension costs more
    v = u.copy()
    free = np.setdiff1d(np.arange(n), B)
    v[free] += rng.normal(size=len(free)) * 0.1
    assert network_energy(net, v) >= network_energy(net, u) - 1e-12


@settings(max_examples=40, deadline=None)
@given(nets)
def test_triangle_inequality(data):
    rng, n, extra = data
    R = resistance_matrix(random_connected(rng, n, extra))
    for i, j, k in rng.integers(0, n, size=(20, 3)):
        assert R[i, k] <= R[i, j] + R[j, k] + 1e-10
