"""Normalized coefficient ratios of the product Hilbert kernel as the window grows.

A ratio that stays put when more scales join the window behaves like a
constant independent of the grid; this is the numerical stand-in for the
decay estimates.

Run: python3 demos/decay_with_window.py
"""
import numpy as np

from dyadrep import kernels
from dyadrep.decomposition import goodness_bounds, verify_decay
from dyadrep.grids import DyadicGrid, GridParams, sample_shift
from dyadrep.haar import HaarSystem
from dyadrep.operator import OperatorOracle

L = 8
o = OperatorOracle.from_kernel(kernels.product_hilbert(), L, closed_form=True)
runs = {}
for W in (4, 6):
    p = GridParams(L=L, W=W, r=3)
    rng = np.random.default_rng(W)
    s1, s2 = (HaarSystem(DyadicGrid(p, sample_shift(rng, p))) for _ in range(2))
    runs[W] = verify_decay(o, s1, s2)
    print(f"W={W}: goodness constants {goodness_bounds(s1)}")

print(f"\n{'group':32s} {'W=4':>10s} {'W=6':>10s}")
for key in sorted(runs[4].groups):
    a, b = runs[4].groups[key].max_ratio, runs[6].groups[key].max_ratio
    if max(a, b) > 1e-9:
        print(f"{key:32s} {a:10.5f} {b:10.5f}")

# groups not shown vanish: the kernel is odd, so equal cubes and paraproduct parts pair to zero
