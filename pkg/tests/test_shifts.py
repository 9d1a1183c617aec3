import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyadrep import kernels as K
from dyadrep.analysis import one_param_bmo
from dyadrep.grids import GridParams
from dyadrep.operator import OperatorOracle
from dyadrep.shifts import (
    CARLESON,
    GeometryError,
    ParaproductSymbol,
    ShiftCoefficients,
    ShiftType,
    apply_shift,
    bilinear,
    dense_norm,
    full_paraproduct_operator,
    half_paraproduct_from_oracle,
    half_paraproduct_operator,
    mixed_paraproduct_operator,
    power_norm,
    random_paraproduct_symbol,
    random_shift,
    shift_kernel_bound,
    shift_norm,
    shift_operator,
)

from helpers import shifted_pair

complexity = st.integers(0, 2)


@pytest.fixture(scope="module")
def pair4():
    return shifted_pair(GridParams(L=4, W=4), seed=3)


def test_shift_type_rules():
    with pytest.raises(ValueError):
        ShiftType(-1, 0, 0, 0)
    with pytest.raises(ValueError):
        ShiftType(1, 0, 0, 0, (False, True, True, True))
    assert ShiftType(0, 0, 2, 1, (True, False, True, True)).to_list() == [0, 0, 2, 1, [True, False, True, True]]


def test_geometry_is_validated(pair4):
    s1, s2 = pair4
    big = s1.cube_id(3, (0,))
    top2 = s2.cube_id(4, (0,))
    inside = [c for c in np.nonzero(s1.cube_scale == 2)[0] if s1.containment[big, c]]
    outside = [c for c in np.nonzero(s1.cube_scale == 2)[0] if not s1.containment[big, c]]
    st_ = ShiftType(1, 1, 0, 0)
    ShiftCoefficients((s1, s2), st_, [big], [top2], [inside[0]], [inside[1]], [top2], [top2], [0.1])
    with pytest.raises(GeometryError):  # wrong depth
        ShiftCoefficients((s1, s2), st_, [big], [top2], [big], [inside[0]], [top2], [top2], [0.1])
    with pytest.raises(GeometryError):  # not contained
        ShiftCoefficients((s1, s2), st_, [big], [top2], [outside[0]], [inside[0]], [top2], [top2], [0.1])
    with pytest.raises(GeometryError):  # cancellativity mismatch
        avg = s1.averaging_id(inside[0])
        ShiftCoefficients((s1, s2), st_, [big], [top2], [avg], [inside[0]], [top2], [top2], [0.1])


@given(complexity, complexity, complexity, complexity, st.integers(0, 10**6))
def test_rank_one_shifts_have_norm_one(i1, i2, j1, j2, seed):
    s1, s2 = shifted_pair(GridParams(L=4, W=3), seed=seed % 13)
    S = random_shift((s1, s2), ShiftType(i1, i2, j1, j2), seed)
    assert S.is_normalized()
    assert S.normalization_ratio() == pytest.approx(1.0)
    nrm = dense_norm(shift_operator(S))
    assert nrm == pytest.approx(1.0, abs=1e-12)
    assert power_norm(shift_operator(S), seed).value <= 1 + 1e-9


@given(complexity, complexity, complexity, complexity, st.integers(0, 10**6))
def test_random_sign_shifts_and_subshifts_bounded(i1, i2, j1, j2, seed):
    s1, s2 = shifted_pair(GridParams(L=4, W=3), seed=seed % 7)
    S = random_shift((s1, s2), ShiftType(i1, i2, j1, j2), seed, signs="uniform")
    res = shift_norm(S, subsets=4, seed=seed)
    assert res["max_subshift_norm"] <= 1 + 1e-9
    assert res["max_block_norm"] <= 1 + 1e-9


def test_scaled_shift_fails(pair4):
    S = random_shift(pair4, ShiftType(1, 0, 0, 1), 0)
    T = S.scaled(2.0)
    assert not T.is_normalized()
    assert dense_norm(shift_operator(T)) == pytest.approx(2.0)


def test_power_iteration_matches_dense(pair4):
    S = random_shift(pair4, ShiftType(1, 2, 0, 1), 5, signs="random")
    assert power_norm(shift_operator(S), tol=1e-12).value == pytest.approx(dense_norm(shift_operator(S)), rel=1e-8)


def test_adjoint_and_bilinear(pair4):
    S = random_shift(pair4, ShiftType(2, 0, 1, 1), 1, signs="uniform")
    rng = np.random.default_rng(0)
    f, g = rng.standard_normal((16, 16)), rng.standard_normal((16, 16))
    assert bilinear(S, f, g) == pytest.approx(np.conj(bilinear(S.adjoint(), g, f)))
    assert apply_shift(S, f).shape == (16, 16)
    # coefficient picture: <S f, g> = sum a <f, h_I1 u_J1> <g, h_I2 u_J2>
    s1, s2 = pair4
    fc = s1.rows @ f @ s2.rows.T / 256
    gc = s1.rows @ g @ s2.rows.T / 256
    direct = np.sum(S.a * fc[S.I1, S.J1] * gc[S.I2, S.J2])
    assert bilinear(S, f, g) == pytest.approx(direct)


def test_serialization_round_trip(pair4):
    S = random_shift(pair4, ShiftType(0, 1, 1, 0), 2, signs="uniform")
    T = ShiftCoefficients.loads(S.dumps(), pair4)
    assert T.stype == S.stype
    for name in ("K", "V", "I1", "I2", "J1", "J2", "a"):
        assert np.array_equal(getattr(T, name), getattr(S, name))


def test_non_cancellative_slots(pair4):
    st_ = ShiftType(0, 0, 1, 0, (False, True, True, True))
    S = random_shift(pair4, st_, 0)
    s1, _ = pair4
    assert np.all(S.I1 >= s1.n_cancellative)
    assert S.is_normalized()


def test_kernel_bound_is_finite(pair4):
    S = random_shift(pair4, ShiftType(1, 1, 1, 1), 0)
    b = shift_kernel_bound(S)
    assert np.isfinite(b["max"]) and b["max"] > 0


def test_carleson_bound_on_half_paraproducts():
    s1, s2 = shifted_pair(GridParams(L=5, W=5), seed=2)
    o = OperatorOracle.from_kernel(K.smooth_fixture(), 5, closed_form=True)
    for depths in ((0, 0), (1, 0), (0, 2)):
        sym = half_paraproduct_from_oracle(o, (s1, s2), *depths)
        op = half_paraproduct_operator(sym)
        assert dense_norm(op) <= 1 + 1e-10
    # a single symbol: ||Pi_b|| <= 2 BMO(b)
    rng = np.random.default_rng(0)
    b = rng.standard_normal(s2.n_cancellative) * np.sqrt(s2.cube_measure[s2.index_cube[: s2.n_cancellative]])
    top = s1.cube_id(5, (0,))
    sym = ParaproductSymbol("half_first", (s1, s2), b[None, :], np.array([top]), np.array([top]), np.array([top]))
    assert dense_norm(half_paraproduct_operator(sym)) <= CARLESON * one_param_bmo(b, s2).value + 1e-12


@pytest.mark.parametrize("kind", ["full", "mixed"])
def test_product_paraproduct_adjoints(kind):
    s1, s2 = shifted_pair(GridParams(L=4, W=4), seed=8)
    sym = random_paraproduct_symbol(kind, (s1, s2), 3)
    make = full_paraproduct_operator if kind == "full" else mixed_paraproduct_operator
    op, ad = make(sym), make(sym, adjoint=True)
    rng = np.random.default_rng(1)
    f, g = rng.standard_normal((16, 16)), rng.standard_normal((16, 16))
    assert np.sum(op.apply(f) * g) == pytest.approx(np.sum(f * ad.apply(g)))
    assert np.sum(op.apply(f) * g) == pytest.approx(np.sum(f * op.apply_adjoint(g)))
    assert 0.2 < dense_norm(op) / sym.bmo_norms[0] < 5
