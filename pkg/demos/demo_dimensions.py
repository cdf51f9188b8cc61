"""
Dimensions
==========

Resistance Hausdorff dimension, spectral dimension and the Euclidean
dimension of the stretched attractor.
"""
import numpy as np

from stretchfrac import builtin
from stretchfrac.dims import euclid_hausdorff, hausdorff_resistance, relation_check, spectral_dimension

for lam in np.linspace(0.1, 0.6, 6):
    dh = hausdorff_resistance(3, lam)
    ds = spectral_dimension(3, lam, 0.5)
    print(f"N=3 lam={lam:.2f} d_H={dh:.4f} d_S={ds:.4f} relation holds: {relation_check(3, lam)}")

# With eta = 1 the measure lives on the lines and beta enters.
print(spectral_dimension(3, 0.5, 1.0, 0.3))
print(spectral_dimension(3, 0.5, 1.0, 1 / (9 * 0.5)))   # excluded case

t = builtin("sierpinski3")
for alpha in (1.0, 0.8, 0.5):
    print(f"alpha={alpha}: Euclidean dimension {euclid_hausdorff(t, alpha):.6f}")
