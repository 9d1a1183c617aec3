"""Operator norms of random shifts and paraproducts.

Run: python3 demos/shift_norms.py
"""
import numpy as np

from dyadrep.grids import DyadicGrid, GridParams, sample_shift
from dyadrep.haar import HaarSystem
from dyadrep.shifts import (
    ShiftType,
    dense_norm,
    full_paraproduct_operator,
    power_norm,
    random_paraproduct_symbol,
    random_shift,
    shift_operator,
)

p = GridParams(L=5, W=4)
rng = np.random.default_rng(2)
systems = tuple(HaarSystem(DyadicGrid(p, sample_shift(rng, p))) for _ in range(2))

print("random shifts with coefficients at the normalization bound")
for t in [(0, 0, 0, 0), (1, 0, 2, 1), (2, 2, 1, 1)]:
    S = random_shift(systems, ShiftType(*t), seed=sum(t), signs="random")
    est = power_norm(shift_operator(S), seed=0)
    print(f"  type {t}: {len(S)} coefficients, norm {est.value:.6f}, doubled {dense_norm(shift_operator(S.scaled(2))):.6f}")

print("\nfull paraproducts: norm over a BMO proxy of the symbol")
for L in (4, 5, 6):
    q = GridParams(L=L, W=L)
    sy = tuple(HaarSystem(DyadicGrid(q, sample_shift(rng, q))) for _ in range(2))
    ratios = []
    for seed in range(10):
        sym = random_paraproduct_symbol("full", sy, seed)
        ratios.append(power_norm(full_paraproduct_operator(sym), seed=seed).value / sym.bmo_norms[0])
    print(f"  L={L}: max ratio {max(ratios):.3f}")
