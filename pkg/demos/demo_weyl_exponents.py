"""
Eigenvalue counting and Weyl exponents
======================================

Dirichlet spectra of the lumped Laplacian on the level-n network, with the
slope of log N(x) against log x fitted over the middle of the spectrum.
"""
import math

from stretchfrac import builtin
from stretchfrac.dims import spectral_dimension
from stretchfrac.graph import build_level
from stretchfrac.harmonic import Constant, make_sequence
from stretchfrac.measure import MeasureSpec
from stretchfrac.spectral import assemble, bracketing_check, eigenvalues, fit_exponent

t = builtin("sierpinski3")


def slope(lam, eta, beta, n, s):
    g = build_level(t, n, make_sequence(t, Constant(lam), n), s)
    ev = eigenvalues(assemble(g, MeasureSpec.create(t, eta, beta), "dirichlet"))
    return fit_exponent(ev), len(ev)


# At lam = 3/5 the lines shrink to points and we recover the classical gasket.
fit, dim = slope(0.6, 0.5, 0.3, 6, 2)
print(f"lam=0.6: slope {fit.slope:.4f} (d_S/2 = {math.log(3) / math.log(5):.4f}), dim {dim}")

# Stretched cases: the fit is dominated by modes living on single lines.
for lam, eta in [(0.1, 0.5), (0.5, 1.0)]:
    fit, dim = slope(lam, eta, 0.3, 5, 2)
    ds = spectral_dimension(3, lam, eta, 0.3)
    print(f"lam={lam} eta={eta}: slope {fit.slope:.4f} vs d_S/2 = {ds / 2:.4f}, dim {dim}")

# Neumann and Dirichlet spectra interlace with an offset of #V0.
g = build_level(t, 3, make_sequence(t, Constant(0.3), 3), 2)
spec = MeasureSpec.create(t, 0.5, 0.2)
en = eigenvalues(assemble(g, spec, "neumann"))
ed = eigenvalues(assemble(g, spec, "dirichlet"))
print("first Neumann eigenvalues", en[:4])
print(bracketing_check(en, ed, 3))
