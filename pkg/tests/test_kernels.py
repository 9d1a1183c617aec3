import numpy as np
import pytest
from scipy import integrate

from dyadrep import kernels as K
from dyadrep.operator import OperatorOracle

AUDIT = K.AuditConfig(samples_per_level=500, levels=6, seed=3)

# regression maxima for AUDIT (sampling is fully seeded)
FROZEN_AUDIT_MAX = {
    "product_hilbert": 8.246044017765035,
    "product_hilbert_line": 3.894489890852758,
    "smooth_fixture": 4.478128364669154,
    "zero": 0.0,
}


def test_eval_examples_and_diagonal():
    assert K.eval(K.product_hilbert_line(), (1.0, 1.0), (0.0, 0.0)) == pytest.approx(1.0)
    v = K.eval(K.product_hilbert(), (0.25, 0.25), (0.0, 0.0))
    assert v == pytest.approx((np.pi / np.tan(np.pi / 4)) ** 2)
    with pytest.raises(K.SingularityError):
        K.eval(K.product_hilbert(), (0.3, 0.1), (0.3, 0.4))
    with pytest.raises(K.SingularityError):
        K.eval(K.product_hilbert(), (1.2, 0.1), (0.2, 0.4))
    assert K.eval(K.zero_kernel(), (0.1, 0.1), (0.1, 0.1)) == 0.0
    with pytest.raises(ValueError):
        K.get_kernel("nope")


def test_constructor_validation():
    with pytest.raises(ValueError):
        K.KernelSpec("x", (), 1.0, 1.0, n=2)
    with pytest.raises(ValueError):
        K.KernelSpec("x", (), 1.5, 1.0)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_cell_integrals_against_scipy(k):
    h = 1 / 32
    for prof in (K.HILBERT_PERIODIC, K.HILBERT_LINE):
        t0 = k * h
        ref = integrate.quad(lambda s: (h - abs(s)) * prof(t0 + s), -h, h, points=[0.0], limit=200)[0]
        got = K.pv_cell_integrals(prof, np.array([t0]), h)[0]
        assert got == pytest.approx(ref, rel=1e-9)


def test_odd_profiles_cancel_on_the_diagonal():
    h = 1 / 16
    for prof in (K.HILBERT_PERIODIC, K.HILBERT_LINE):
        assert K.pv_cell_integrals(prof, np.array([0.0]), h)[0] == 0.0


def test_closed_forms_match_quadrature():
    for prof in (K.HILBERT_LINE,) + tuple(p for _, p, _ in K.smooth_fixture().terms):
        qt = K.profile_table(prof, 4, closed_form=False)
        ct = K.profile_table(prof, 4, closed_form=True)
        assert np.abs(qt - ct).max() <= 1e-9 * max(np.abs(ct).max(), 1e-30) + 1e-15


def test_tables_circulant_and_toeplitz():
    t = K.profile_table(K.HILBERT_PERIODIC, 3)
    assert np.allclose(t, -t.T)
    assert np.allclose(np.roll(np.roll(t, 1, 0), 1, 1), t)
    s = K.profile_table(K.HILBERT_LINE, 3)
    assert np.allclose(s, -s.T)
    assert not np.allclose(np.roll(np.roll(s, 1, 0), 1, 1), s)


def test_broken_kernel_is_not_integrable():
    with pytest.raises(K.PVDivergenceError):
        OperatorOracle.from_kernel(K.broken_kernel(), 4)
    with pytest.raises(K.PVDivergenceError):
        K.partial_kernel(K.broken_kernel(), np.ones(16), np.ones(16), 4)


@pytest.mark.parametrize("name", sorted(FROZEN_AUDIT_MAX))
def test_audit_frozen_and_passing(name):
    rep = K.audit_conditions(K.get_kernel(name), AUDIT)
    worst = max(c.max_ratio for c in rep.conditions.values())
    assert worst == pytest.approx(FROZEN_AUDIT_MAX[name], rel=1e-9, abs=1e-300)
    assert rep.passed
    assert set(rep.conditions) == set(K.CONDITIONS)


def test_audit_negative_control_fails_and_grows():
    rep = K.audit_conditions(K.broken_kernel(), AUDIT)
    assert not rep.passed
    size = rep.conditions["size"].per_level
    assert size[-1] > 8 * size[0]


def test_audit_independent_of_workers():
    a = K.audit_conditions(K.product_hilbert(), AUDIT, workers=1).to_json()
    b = K.audit_conditions(K.product_hilbert(), AUDIT, workers=4).to_json()
    assert a == b


def test_partial_kernel_weights():
    k = K.smooth_fixture()
    rng = np.random.default_rng(0)
    f2, g2 = rng.standard_normal(16), rng.standard_normal(16)
    pk = K.partial_kernel(k, f2, g2, 4)
    t = np.array([0.1, 0.37])
    ref = sum(c * np.sum(K.profile_table(q, 4) * np.outer(g2, f2)) * p(t) for c, p, q in k.terms)
    assert np.allclose(pk(t, 0.0), ref)
    assert pk.constant > 0
    h = K.partial_kernel(K.product_hilbert(), f2, g2, 4)
    with pytest.raises(K.SingularityError):
        h(0.2, 0.2)
