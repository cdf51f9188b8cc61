"""
Compatible sequences and effective resistance
=============================================

A sequence lambda_k (constant or geometrically perturbed) gives a chain of
networks. Compatibility means every finer level induces the same resistance
on the boundary, which we check directly.
"""
import numpy as np

from stretchfrac import builtin
from stretchfrac.graph import build_level
from stretchfrac.harmonic import Constant, Perturbed, kappa_bounds, make_sequence, sequence_residual
from stretchfrac.netalg import resistance_matrix

t = builtin("sierpinski3")
seq = make_sequence(t, Perturbed(0.3, 0.05, 0.5), 4)
print("lambdas", np.round(seq.lambdas, 6))
print("rhos   ", np.round(seq.rhos[:, 0], 6))
print("kappa bounds", kappa_bounds(seq, 4))

for depth in (1, 2, 3):
    print(f"trace residual at depth {depth}: {sequence_residual(seq, depth):.2e}")

# boundary resistances do not move as the level grows
for n in range(1, 5):
    g = build_level(t, n, seq)
    R = resistance_matrix(g, g.boundary)
    print(f"n={n} vertices={g.n_vertices:5d} R(p0,p1)={R[0, 1]:.12f}")

# the same for a constant sequence on the Vicsek cross
t = builtin("vicsek")
seq = make_sequence(t, Constant(0.2), 3)
for n in (1, 2, 3):
    g = build_level(t, n, seq)
    print(f"vicsek n={n} R(p0,p2)={resistance_matrix(g, g.boundary)[0, 2]:.12f}")
