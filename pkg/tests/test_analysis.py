import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadrep.analysis import h1_norm, one_param_bmo, product_bmo_proxy, square_function
from dyadrep.grids import GridParams
from dyadrep.haar import forward_transform

from helpers import make_system, shifted_pair


def brute_square(f, s1, s2):
    c = forward_transform(f, s1, s2).cancellative_part()
    out = np.zeros(f.shape)
    for a in range(s1.n_cancellative):
        for b in range(s2.n_cancellative):
            k, v = s1.index_cube[a], s2.index_cube[b]
            out += np.abs(c[a, b]) ** 2 * np.outer(s1.cube_rows[k], s2.cube_rows[v]) / (s1.cube_measure[k] * s2.cube_measure[v])
    return np.sqrt(out)


def brute_bmo(c, s1, s2):
    best = 0.0
    for k0 in range(s1.n_cubes):
        for v0 in range(s2.n_cubes):
            tot = 0.0
            for a in range(s1.n_cancellative):
                for b in range(s2.n_cancellative):
                    if s1.containment[k0, s1.index_cube[a]] and s2.containment[v0, s2.index_cube[b]]:
                        tot += abs(c[a, b]) ** 2
            best = max(best, tot / (s1.cube_measure[k0] * s2.cube_measure[v0]))
    return np.sqrt(best)


@given(st.integers(0, 2**31 - 1))
def test_square_function_and_h1(seed):
    s1, s2 = shifted_pair(GridParams(L=3, W=3), seed=seed % 97)
    f = np.random.default_rng(seed).standard_normal((8, 8))
    S = square_function(f, s1, s2)
    assert np.allclose(S, brute_square(f, s1, s2))
    assert h1_norm(f, s1, s2) == pytest.approx(S.sum() / 64)


def test_product_bmo_proxy_brute():
    s1, s2 = shifted_pair(GridParams(L=3, W=3), seed=1)
    c = np.random.default_rng(0).standard_normal((s1.n_cancellative, s2.n_cancellative))
    got = product_bmo_proxy(c, s1, s2)
    assert got.value == pytest.approx(brute_bmo(c, s1, s2))
    assert got.kind == "product_rectangle"
    # one coefficient on the top rectangle: mass 1 over a unit rectangle
    e = np.zeros_like(c)
    top1 = s1.cube_id(3, (0,))
    top2 = s2.cube_id(3, (0,))
    e[top1, top2] = 1.0
    assert product_bmo_proxy(e, s1, s2).value == pytest.approx(1.0)


def test_one_param_bmo():
    sy = make_system(GridParams(L=4, W=4))
    c = np.zeros(sy.n_cancellative)
    small = sy.cube_id(1, (3,))
    c[small] = 1.0
    # the unit coefficient sits in a cube of measure 1/8
    assert one_param_bmo(c, sy).value == pytest.approx(np.sqrt(8.0))
    f = np.random.default_rng(1).standard_normal(16)
    direct = one_param_bmo(forward_transform(f, sy).values[: sy.n_cancellative], sy).value
    assert one_param_bmo(f, sy).value == pytest.approx(direct)
