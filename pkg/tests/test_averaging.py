import itertools
from fractions import Fraction

import numpy as np
import pytest

from dyadrep import kernels as K
from dyadrep.averaging import (
    good_restricted_sum,
    independence_covariance,
    verify_averaging_exact,
    verify_averaging_mc,
)
from dyadrep.grids import GridParams, is_good, pi_good_table
from dyadrep.haar import haar_function
from dyadrep.operator import OperatorOracle

from helpers import shifted_pair

P = GridParams(L=5, W=3, r=2, badness_factor=0.25)


def mean_free(rng, N):
    f = rng.standard_normal((N, N))
    return f - f.mean(0, keepdims=True) - f.mean(1, keepdims=True) + f.mean()


@pytest.fixture(scope="module")
def oracle():
    return OperatorOracle.from_kernel(K.smooth_fixture(), 5, closed_form=True)


def brute_sum(o, s1, s2, f, g, pi):
    """Quadruple loop over basis functions with cube-level goodness."""
    p = s1.params
    h1 = {int(k): haar_function(s1.index(int(k))) for k in s1.basis}
    h2 = {int(k): haar_function(s2.index(int(k))) for k in s2.basis}

    def weight(sy, k, l):
        I, J = sy.index(l), sy.index(k)
        small = I.cube if I.cube.scale <= J.cube.scale else J.cube
        return is_good(small, p) / float(pi[small.scale])

    total = 0.0
    for k1, l1, k2, l2 in itertools.product(h1, h1, h2, h2):
        w = weight(s1, k1, l1) * weight(s2, k2, l2)
        if w == 0:
            continue
        hin, hout = np.outer(h1[l1], h2[l2]), np.outer(h1[k1], h2[k2])
        fc = np.sum(f * hin) / f.size
        gc = np.sum(g * hout) / g.size
        total += w * fc * gc * o.pair(hin, hout)
    return total


def test_good_restricted_sum_against_loops():
    p = GridParams(L=4, W=3, r=2, badness_factor=0.25)
    s1, s2 = shifted_pair(p, seed=2)
    o = OperatorOracle.random(16, 16, seed=1)
    rng = np.random.default_rng(0)
    f, g = rng.standard_normal((16, 16)), rng.standard_normal((16, 16))
    pi = pi_good_table(p)
    assert good_restricted_sum(o, s1, s2, f, g, pi, pi) == pytest.approx(brute_sum(o, s1, s2, f, g, pi), rel=1e-10)


def test_everything_good_recovers_the_pairing(oracle):
    p = GridParams(L=5, W=3, r=4)
    s1, s2 = shifted_pair(p, seed=0)
    rng = np.random.default_rng(3)
    f, g = mean_free(rng, 32), mean_free(rng, 32)
    assert good_restricted_sum(oracle, s1, s2, f, g) == pytest.approx(oracle.pair(f, g), rel=1e-12)


def test_exact_identity(oracle):
    rng = np.random.default_rng(4)
    for _ in range(3):
        f, g = mean_free(rng, 32), mean_free(rng, 32)
        rep = verify_averaging_exact(oracle, P, f, g)
        assert rep.finite
        assert rep.grid_pairs == 64
        assert rep.residual <= 1e-9


def test_uniform_probability_is_not_enough(oracle):
    rng = np.random.default_rng(5)
    f, g = mean_free(rng, 32), mean_free(rng, 32)
    assert verify_averaging_exact(oracle, P, f, g, uniform_pi=True).residual > 1e-3


def test_zero_probability_scales_lose_mass(oracle):
    rng = np.random.default_rng(6)
    f, g = mean_free(rng, 32), mean_free(rng, 32)
    rep = verify_averaging_exact(oracle, GridParams(L=5, W=3, r=1), f, g)
    assert not rep.finite
    assert rep.residual > 1e-3


def test_zero_operator(oracle):
    rng = np.random.default_rng(7)
    f, g = mean_free(rng, 32), mean_free(rng, 32)
    rep = verify_averaging_exact(OperatorOracle.zero(32, 32), P, f, g)
    assert rep.residual == 0 and not rep.relative


def test_bilinear(oracle):
    s1, s2 = shifted_pair(P, seed=9)
    pi = pi_good_table(P)
    rng = np.random.default_rng(8)
    f1, f2, g = rng.standard_normal((3, 32, 32))
    lhs = good_restricted_sum(oracle, s1, s2, 2 * f1 - 3 * f2, g, pi, pi)
    rhs = 2 * good_restricted_sum(oracle, s1, s2, f1, g, pi, pi) - 3 * good_restricted_sum(oracle, s1, s2, f2, g, pi, pi)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@pytest.mark.parametrize("scale", [1, 2])
def test_position_independent_of_goodness(scale):
    assert independence_covariance(P, scale) == Fraction(0)


def test_monte_carlo():
    p = GridParams(L=6, W=4, r=2, badness_factor=0.25)
    o = OperatorOracle.from_kernel(K.smooth_fixture(), 6, closed_form=True)
    rng = np.random.default_rng(9)
    f, g = mean_free(rng, 64), mean_free(rng, 64)
    runs = {n: verify_averaging_mc(o, p, f, g, samples=n, seed=1, workers=4) for n in (100, 1000, 10000)}
    assert abs(runs[1000].z) <= 3
    # standard error shrinks like samples ** -1/2
    for n in (1000, 10000):
        assert runs[n].stderr / runs[100].stderr == pytest.approx((100 / n) ** 0.5, rel=0.3)


def test_monte_carlo_zero_operator():
    rng = np.random.default_rng(11)
    f, g = mean_free(rng, 32), mean_free(rng, 32)
    rep = verify_averaging_mc(OperatorOracle.zero(32, 32), P, f, g, samples=10)
    assert rep.estimate == 0 and rep.stderr == 0 and rep.z == 0


def test_monte_carlo_worker_invariance(oracle):
    rng = np.random.default_rng(10)
    f, g = mean_free(rng, 32), mean_free(rng, 32)
    a = verify_averaging_mc(oracle, P, f, g, samples=20, seed=5, workers=1)
    b = verify_averaging_mc(oracle, P, f, g, samples=20, seed=5, workers=4)
    assert a.estimate == b.estimate
