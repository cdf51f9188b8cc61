from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stretchfrac.graph import build_level
from stretchfrac.measure import MeasureError, MeasureSpec, cell_measure, line_mass_total, vertex_masses
from stretchfrac.templates import builtin

NAMES = ["sierpinski3", "sierpinski_level3", "gasket_3", "vicsek", "lindstrom", "hata"]


def graph(t, n, s=1):
    sc = SimpleNamespace(lambdas=np.full(n, 0.2), rhos=np.full((n, 1), 0.3), r0=t.r0(0.2))
    return build_level(t, n, sc, s)


def test_cell_measure_examples():
    t = builtin("sierpinski3")
    assert cell_measure(MeasureSpec.create(t, 0.5, 0.2), ()) == 1.0
    assert cell_measure(MeasureSpec.create(t, 1.0, 0.2), (1, 2, 3)) == pytest.approx(0.008)
    assert cell_measure(MeasureSpec.create(t, 0.5, 0.2), (2,)) == pytest.approx(0.5 * 0.2 + 0.5 / 3)


def test_spec_validation():
    t = builtin("sierpinski3")
    for eta, beta in [(0.0, 0.2), (1.2, 0.2), (0.5, 1 / 3), (0.5, 0.0)]:
        with pytest.raises(MeasureError):
            MeasureSpec.create(t, eta, beta)
    with pytest.raises(MeasureError):
        MeasureSpec.create(t, 0.5, 0.2, a=[1, 2])
    spec = MeasureSpec.create(t, 0.5, 0.2, a=[1, 2, 3, 4, 5, 6])
    assert spec.a.sum() == pytest.approx(1 - 0.6, abs=1e-15)


def test_line_masses_sierpinski():
    t = builtin("sierpinski3")
    spec = MeasureSpec.create(t, 1.0, 0.2)
    np.testing.assert_allclose(spec.a, 1 / 15)
    half = MeasureSpec.create(t, 0.5, 0.2)
    g = graph(t, 1)
    assert line_mass_total(g, half) == pytest.approx(0.5 * line_mass_total(g, spec))


@pytest.mark.parametrize("name", NAMES)
def test_total_mass(name):
    t = builtin(name)
    for n in range(1, 6 if t.N < 6 else 4):
        g = graph(t, n, 2)
        for eta in (0.3, 0.5, 1.0):
            for beta in (0.1 / t.N, 0.9 / t.N):
                m = vertex_masses(g, MeasureSpec.create(t, eta, beta))
                assert abs(m.sum() - 1) <= 1e-12
                assert np.all(m > 0)


@pytest.mark.parametrize("name", ["sierpinski3", "vicsek", "hata"])
def test_telescoping(name):
    t = builtin(name)
    spec = MeasureSpec.create(t, 1.0, 0.5 / t.N)
    for n in range(1, 6):
        g = graph(t, n)
        total = t.N**n * spec.cell_measure(n) + line_mass_total(g, spec)
        assert total == pytest.approx(1.0, abs=1e-12)
        assert line_mass_total(g, spec) == pytest.approx(1 - (spec.beta * t.N) ** n, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(
    st.sampled_from(NAMES),
    st.floats(0.01, 1.0),
    st.floats(0.01, 0.99),
    st.integers(0, 6),
)
def test_cell_measure_bounds(name, eta, frac, k):
    t = builtin(name)
    spec = MeasureSpec.create(t, eta, frac / t.N)
    m = spec.cell_measure(k)
    assert spec.beta**k * (1 - 1e-12) <= m <= float(t.N) ** (-k) * (1 + 1e-12)
