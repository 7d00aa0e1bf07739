import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from ultracarl.fields import (CoefficientSet, CompactBump, ConstantField, ScaledField, SumField, make_bump,
                              make_cone_collar_coeffs, make_suite)
from ultracarl.verify import (CalibrationError, VerificationError, assemble, calibrate, largest_constant, prepare,
                              uniqueness_report, verify_absorption, verify_boundary, verify_interior, verify_suite)
from ultracarl.weight import CarlemanParams

RES = 16


@pytest.fixture
def setup_b(unit_disc, centre_params):
    return prepare(unit_disc, centre_params, RES)


@pytest.fixture
def suite(unit_disc):
    return make_suite(unit_disc, ["bump"], 24, seed=3)


def test_zero_field_trivial_pass(unit_disc, centre_params, setup_b):
    z = ScaledField(make_bump(unit_disc), 0.0)
    rep = verify_boundary(unit_disc, centre_params, z, RES, C=1.0, setup=setup_b)
    assert all(v == 0.0 for v in rep.terms().values())
    assert rep.margin == 0.0 and rep.passed


def test_homogeneity(unit_disc, centre_params, setup_b, suite):
    z = suite[0]
    base = verify_boundary(unit_disc, centre_params, z, RES, C=50.0, setup=setup_b)
    scaled = verify_boundary(unit_disc, centre_params, ScaledField(z, 3.0), RES, C=50.0, setup=setup_b)
    for k, v in base.terms().items():
        assert scaled.terms()[k] == pytest.approx(9.0 * v, rel=1e-12)
    assert scaled.passed == base.passed
    assert scaled.margin == pytest.approx(9.0 * base.margin, rel=1e-10)


def test_terms_nonnegative(setup_b, suite):
    g = assemble(setup_b, suite)
    for k in ("first_order", "zeroth", "bulk", "boundary"):
        assert np.all(np.diag(g[k]) >= 0), k
        # Gram matrices of nonnegative weights are PSD
        assert np.linalg.eigvalsh(0.5 * (g[k] + g[k].T)).min() >= -1e-10 * max(1.0, np.abs(g[k]).max())


def test_empty_suite_gives_infinity(unit_disc, centre_params):
    cal = calibrate(unit_disc, centre_params, [], RES)
    assert cal.C == float("inf") and cal.n_fields == 0


def test_calibration_needs_enough_fields(unit_disc, centre_params, suite):
    with pytest.raises(VerificationError, match="at least 20"):
        calibrate(unit_disc, centre_params, suite[:5], RES)


def test_enlarging_suite_lowers_C(unit_disc, centre_params, setup_b, suite):
    small = calibrate(unit_disc, centre_params, suite[:20], RES, setup=setup_b)
    big = calibrate(unit_disc, centre_params, suite, RES, setup=setup_b)
    assert 0 < big.C <= small.C * (1 + 1e-9)
    assert big.C <= big.C_fieldwise * (1 + 1e-9)


def test_calibrated_C_holds_on_span(unit_disc, centre_params, setup_b, suite):
    cal = calibrate(unit_disc, centre_params, suite, RES, setup=setup_b)
    for rep in verify_suite(setup_b, suite, cal.C):
        assert rep.margin >= -1e-9 * rep.rhs_total
    rng = np.random.default_rng(0)
    combos = [SumField(suite, rng.normal(size=len(suite))) for _ in range(5)]
    for rep in verify_suite(setup_b, combos, cal.C):
        assert rep.margin >= -1e-9 * rep.rhs_total
    # a far larger constant must fail somewhere
    assert not all(r.passed for r in verify_suite(setup_b, suite, 1e3 * cal.C))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31), k=st.integers(2, 7))
def test_largest_constant_matches_pencil_eigenvalue(seed, k):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(k, k))
    N = rng.normal(size=(k, k))
    A = M @ M.T + 0.1 * np.eye(k)
    B = N @ N.T + 0.1 * np.eye(k)
    C, _, (lo, hi) = largest_constant(A, B)
    oracle = eigh(A, B, eigvals_only=True)[0]
    assert C == pytest.approx(oracle, rel=1e-9)
    assert lo <= oracle * (1 + 1e-9)


def test_largest_constant_ignores_unresolved_directions():
    # A has rank 2; its third direction holds only rounding noise of either sign
    rng = np.random.default_rng(0)
    V = rng.normal(size=(3, 2))
    A = V @ V.T
    noise = rng.normal(size=(3, 3)) * 1e-17
    A_noisy = A + 0.5 * (noise + noise.T)
    B = 1e-6 * (A + 1e-9 * np.eye(3))
    C, _, _ = largest_constant(A_noisy, B)
    assert 0 < C < np.inf
    # the ratio is 1e6 on the resolved plane; the unresolved direction, with a
    # 1e-15 left side, can only lower it to the floor scale
    assert C < 1e6


def test_largest_constant_detects_vanishing_right_side():
    A = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    B = np.eye(3)
    C, _, _ = largest_constant(A, B)
    # x = (1, -1, 0) has zero right side and positive left side
    assert C <= 2 * 3 * 64 * np.finfo(float).eps
    with pytest.raises(CalibrationError, match="no positive C"):
        largest_constant(np.diag([1.0, 0.0]), np.eye(2))


def test_vanishing_precheck(unit_disc, centre_params, setup_b):
    with pytest.raises(VerificationError, match="does not vanish"):
        verify_boundary(unit_disc, centre_params, ConstantField(unit_disc.sig, 1.0), RES, C=1.0, setup=setup_b)


def test_compact_support_no_boundary_term(unit_disc, centre_params, setup_b):
    z = CompactBump(unit_disc.sig, np.zeros(2), 0.6)
    rep = verify_boundary(unit_disc, centre_params, z, RES, setup=setup_b)
    assert rep.rhs_boundary == 0.0
    assert rep.rhs_bulk > 0 and rep.passed


def test_interior_reports(unit_disc, centre_params):
    params = centre_params.with_(a=10.0)
    setup = prepare(unit_disc, params, RES, interior=True)
    z = make_bump(unit_disc)  # independent of t
    rt = verify_interior(unit_disc, params, z, RES, variant="t", setup=setup)
    rx = verify_interior(unit_disc, params, z, RES, variant="x", setup=setup)
    assert rt.rhs_interior_grad == 0.0 and rx.rhs_interior_grad > 0
    assert rt.rhs_interior_zeroth == rx.rhs_interior_zeroth > 0
    assert rt.variant == "t" and rx.variant == "x" and rt.passed and rx.passed
    zero = verify_interior(unit_disc, params, ScaledField(z, 0.0), RES, C=1.0, setup=setup)
    assert zero.passed and zero.margin == 0.0
    with pytest.raises(VerificationError, match="variant"):
        verify_interior(unit_disc, params, z, RES, variant="y", setup=setup)


def test_interior_empty_observation_region(unit_disc, centre_params):
    params = centre_params.with_(a=10.0, sigma=1e-9)
    with pytest.raises(VerificationError, match="no observation nodes"):
        prepare(unit_disc, params, RES, interior=True)


def test_interior_needs_large_a(unit_disc, centre_params):
    with pytest.raises(ValueError):
        prepare(unit_disc, centre_params.with_(a=9.0, R=1.0), RES, interior=True)


def _collar_params(dom):
    from ultracarl.geometry import origin

    return CarlemanParams.from_delta(origin(dom.sig), 9.0, 0.1, 1.0, mu=0.05)


def test_absorption_zero_coefficients(unit_disc):
    params = _collar_params(unit_disc)
    coeffs = make_cone_collar_coeffs(params.p, params.mu, [0.0, 0.0, 0.0], unit_disc.sig, V=0.0)
    rep = verify_absorption(unit_disc, params, coeffs, make_bump(unit_disc), RES)
    assert rep.I0 == 0.0 and rep.I1 == 0.0
    assert rep.dominance_ratios == (float("inf"), float("inf")) and rep.passed


def test_absorption_collar_violation(unit_disc):
    params = _collar_params(unit_disc)
    sig = unit_disc.sig
    bad = CoefficientSet(ConstantField(sig, 1.0), [ConstantField(sig, 1.0)] * 3, mu=params.mu)
    with pytest.raises(VerificationError, match="collar violated"):
        verify_absorption(unit_disc, params, bad, make_bump(unit_disc), RES)


def test_absorption_scales_with_V(unit_disc):
    params = _collar_params(unit_disc)
    z = make_bump(unit_disc)
    reps = [verify_absorption(unit_disc, params,
                              make_cone_collar_coeffs(params.p, params.mu, [0.0] * 3, unit_disc.sig, V=V), z, RES)
            for V in (1.0, 2.0)]
    assert reps[1].I0 == pytest.approx(4 * reps[0].I0, rel=1e-12)
    assert reps[1].dominance_ratios[0] == pytest.approx(reps[0].dominance_ratios[0] / 4, rel=1e-12)


def test_uniqueness_zero_field(unit_disc):
    params = _collar_params(unit_disc)
    coeffs = make_cone_collar_coeffs(params.p, params.mu, [0.1, 0.1, 0.1], unit_disc.sig, V=1.0)
    rep = uniqueness_report(unit_disc, params, coeffs, ScaledField(make_bump(unit_disc), 0.0), RES, C=1.0)
    assert rep.bound == 0.0 and rep.weighted_norm == 0.0 and rep.consistent


def test_temporal_angular_sign_toggle():
    from ultracarl.domain import Ball, DomainModel
    from ultracarl.geometry import Signature, origin

    # q_tmp vanishes identically for one time dimension, so use m = 2
    sig = Signature(2, 1)
    dom = DomainModel(sig, 1.5, Ball([0.0], 1.0))
    params = CarlemanParams.from_delta(origin(sig), 9.0, 0.1, 1.0)
    fields = make_suite(dom, ["bump"], 3, seed=5)
    plus = prepare(dom, params, RES)
    minus = prepare(dom, params, RES, tmp_sign=-1.0)
    gp, gm = assemble(plus, fields), assemble(minus, fields)
    # the two differ by twice the nonnegative temporal angular term
    assert np.all(np.diag(gp["first_order"]) > np.diag(gm["first_order"]))
    assert np.array_equal(gp["bulk"], gm["bulk"])
    with pytest.raises(VerificationError):
        prepare(dom, params, RES, tmp_sign=0.5)
