"""Good cubes on random grids, and why the averaging weight must depend on scale.

Run: python3 demos/good_cubes_and_averaging.py
"""
import numpy as np

from dyadrep import kernels
from dyadrep.averaging import independence_covariance, verify_averaging_exact
from dyadrep.grids import GridParams, pi_good_table
from dyadrep.operator import OperatorOracle


def mean_free(rng, N):
    f = rng.standard_normal((N, N))
    return f - f.mean(0, keepdims=True) - f.mean(1, keepdims=True) + f.mean()


loose = GridParams(L=5, W=3, r=2, badness_factor=0.25)
strict = GridParams(L=5, W=3, r=1, badness_factor=2.0)

print("probability that a cube is good, by scale")
for name, p in (("r=2, c=0.25", loose), ("r=1, c=2   ", strict)):
    table = pi_good_table(p)
    print(f"  {name}:", {s: str(v) for s, v in table.items()})

# goodness depends only on the coarse shift bits, so it is independent of position
print("cov(start, good) at scale 1:", independence_covariance(loose, 1))

o = OperatorOracle.from_kernel(kernels.smooth_fixture(), 5, closed_form=True)
rng = np.random.default_rng(0)
f, g = mean_free(rng, 32), mean_free(rng, 32)

print("\naverage over all 64 grid pairs of the good-restricted sum, against <Tf, g>")
for label, p, uniform in (
    ("scale-resolved weights", loose, False),
    ("one weight for all scales", loose, True),
    ("no good cubes below the top", strict, False),
):
    rep = verify_averaging_exact(o, p, f, g, uniform_pi=uniform)
    print(f"  {label:28s} relative residual {rep.residual:.2e}")
