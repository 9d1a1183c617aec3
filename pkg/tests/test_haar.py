import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadrep.grids import DyadicGrid, GridParams, GridShift
from dyadrep.haar import (
    HaarIndex,
    coefficients_from_cancellative,
    forward_transform,
    haar_function,
    inner,
    inverse_transform,
    signatures,
    slice_pair,
)

from helpers import make_system

bits4 = st.lists(st.integers(0, 1), min_size=4, max_size=4).map(lambda b: [[x] for x in b])


def gram(rows, vol):
    return rows @ rows.T * vol


def test_signatures():
    assert signatures(1) == [(1,)]
    assert signatures(2) == [(0, 1), (1, 0), (1, 1)]
    assert signatures(2, cancellative=False)[0] == (0, 0)


@given(bits4)
def test_basis_is_orthonormal(bits):
    sy = make_system(GridParams(L=4, W=4, r=5), bits)
    assert sy.n_basis == 2**4
    assert np.abs(gram(sy.basis_rows, sy.cell_volume) - np.eye(sy.n_basis)).max() < 1e-12


def test_rows_match_definition():
    p = GridParams(L=5, W=3)
    grid = DyadicGrid(p, GridShift(((1,), (1,), (0,))))
    sy = make_system(p, [[1], [1], [0]])
    for k in range(len(sy.rows)):
        idx = sy.index(k)
        assert sy.index_id(idx) == k
        assert np.allclose(sy.rows[k], haar_function(HaarIndex(grid.cube(idx.cube.scale, idx.cube.position), idx.signature)))
    assert sy.averaging_id(0) == sy.n_cancellative


def test_haar_function_errors_and_shape():
    p = GridParams(L=4, W=2)
    grid = DyadicGrid.standard(p)
    with pytest.raises(ValueError):
        haar_function(HaarIndex(grid.cube(0, (1,)), (1,)))
    with pytest.raises(ValueError):
        haar_function(HaarIndex(grid.cube(1, (1,)), (1, 0)))
    h = haar_function(HaarIndex(grid.cube(2, (1,)), (1,)))
    # side 4 cells at 1/16: values +-2 on [4, 6) and [6, 8)
    assert h.tolist() == [0] * 4 + [2.0, 2.0, -2.0, -2.0] + [0] * 8
    assert inner(h, h, p.cell_volume) == pytest.approx(1.0)


@given(bits4, bits4, st.integers(0, 2**32 - 1))
def test_product_round_trip_and_parseval(b1, b2, seed):
    p = GridParams(L=4, W=4, r=5)
    s1, s2 = make_system(p, b1), make_system(p, b2)
    f = np.random.default_rng(seed).standard_normal((16, 16))
    c = forward_transform(f, s1, s2)
    assert np.abs(inverse_transform(c) - f).max() < 1e-12
    assert np.sum(c.values**2) == pytest.approx(np.sum(f**2) * s1.cell_volume * s2.cell_volume, rel=1e-12)
    dense = s1.basis_rows @ f @ s2.basis_rows.T * s1.cell_volume * s2.cell_volume
    assert np.abs(c.values - dense).max() < 1e-12


def test_window_below_mesh_keeps_top_averages():
    p = GridParams(L=5, W=3)
    sy = make_system(p, [[1], [0], [1]])
    f = np.random.default_rng(0).standard_normal(32)
    c = forward_transform(f, sy)
    assert len(c.values) == sy.n_basis == 32
    assert np.allclose(inverse_transform(c), f)
    avg = c.values[sy.n_cancellative :]
    tops = sy.cube_rows[sy.top_cubes]
    assert np.allclose(avg, tops @ f * p.cell_volume / np.sqrt(sy.cube_measure[sy.top_cubes]))


def test_two_dimensional_gram():
    p = GridParams(n=2, L=3, W=3, r=4)
    sy = make_system(p, [[1, 0], [0, 1], [1, 1]])
    rows = sy.basis_rows
    assert rows.shape == (64, 64)
    assert np.abs(gram(rows, sy.cell_volume) - np.eye(64)).max() < 1e-12
    f = np.random.default_rng(1).standard_normal((8, 8))
    assert np.allclose(inverse_transform(forward_transform(f, sy)), f)


def test_cancellative_embedding_and_slices():
    p = GridParams(L=4, W=4)
    s1, s2 = make_system(p, [[0], [1], [1], [0]]), make_system(p)
    cc = np.random.default_rng(2).standard_normal((s1.n_cancellative, s2.n_cancellative))
    f = inverse_transform(coefficients_from_cancellative(cc, s1, s2))
    assert np.allclose(f.sum(axis=0), 0) and np.allclose(f.sum(axis=1), 0)
    idx = s1.index(3)
    sl = slice_pair(f, idx, axis=0)
    assert np.allclose(sl, s1.rows[3] @ f * s1.cell_volume)
    sl2 = slice_pair(f, s2.index(5), axis=1)
    assert np.allclose(sl2, f @ s2.rows[5] * s2.cell_volume)


def test_coefficients_csv():
    p = GridParams(L=2, W=2)
    sy = make_system(p)
    c = forward_transform(np.arange(4.0), sy)
    lines = c.to_csv().splitlines()
    assert lines[0] == "scale,position,signature,value"
    assert len(lines) == 5
