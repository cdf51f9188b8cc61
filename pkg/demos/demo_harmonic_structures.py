"""
Harmonic structures on stretched fractals
=========================================

For each builtin template and a contraction lambda we look for line
resistances rho that make the level-1 network trace back to the level-0
network. Where a closed form is known we compare against it.
"""
import numpy as np

from stretchfrac import builtin
from stretchfrac.harmonic import Infeasible, closed_form, discover, residual, solve_rho

# The Sierpinski gasket: rho is a root of a quadratic in lambda.
t = builtin("sierpinski3")
cf = closed_form(t)
for lam in (0.1, 0.3, 0.5, 0.6):
    rho = solve_rho(t, lam)[0]
    print(f"sierpinski3 lam={lam:.2f} rho={rho:.10f} closed={cf.rho(lam):.10f} residual={residual(t, lam, rho):.1e}")

# Past lam = 3/5 the lines would need negative resistance.
try:
    solve_rho(t, 0.65)
except Infeasible as exc:
    print("lam=0.65:", exc)

# Higher-dimensional gaskets and the Vicsek cross follow the same pattern.
for name in ("gasket_3", "gasket_4", "vicsek", "hata"):
    t = builtin(name)
    lam = 0.5 * closed_form(t).upper
    print(f"{name:12s} lam={lam:.4f} rho={solve_rho(t, lam)}")

# Lindstrom's snowflake has no structure with equal E0 weights; with free
# weights per distance class a search still finds one.
t = builtin("lindstrom")
groups = {}
for i, e in enumerate(t.e0_edges):
    groups.setdefault(min((e.v - e.u) % 6, (e.u - e.v) % 6), []).append(i)
found = discover(t, 0.1, free=list(groups.values()), n_random=6)
c = found.candidates[0]
print("lindstrom r0 classes", np.unique(np.round(c.r0, 6)), "rho", c.rho, "residual", f"{c.residual:.1e}")
