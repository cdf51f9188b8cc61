"""
Resistance diameters of cells
=============================

Cells of level n have resistance diameter of order lambda^n; the ratio of
successive diameters settles at lambda after a couple of levels.
"""
from stretchfrac import builtin
from stretchfrac.dims import diameter_scan
from stretchfrac.harmonic import Constant, make_sequence

for name, lam, n_max in [("sierpinski3", 0.3, 5), ("gasket_3", 0.4, 4), ("hata", 0.5, 5)]:
    t = builtin(name)
    scan = diameter_scan(t, make_sequence(t, Constant(lam), n_max), n_max)
    print(name, "cell diameters", scan.cell_diameter.round(8))
    print(name, "ratios / lambda", (scan.ratios / lam).round(6))
