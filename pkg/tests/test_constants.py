import math

import numpy as np
import pytest
import scipy.special

from mtlab.constants import (
    SemiclassicalConstants,
    bessel_j,
    bessel_zero,
    lambda_gn,
    mt_constant,
    semiclassical_weight,
    unit_ball_volume,
)

# 50-digit Gamma-formula evaluations, frozen as the independent oracle
LAMBDA_GN_ORACLE = {
    1: 1.086434811213308014575,
    2: 0.7511255444649424828587,
    3: 0.4933940570780080499506,
    4: 0.3121892056977779516773,
    8: 0.03910833570207788971407,
    16: 0.0003115984630056472745723,
}

OMEGA_ORACLE = {
    1: 2.0,
    2: 3.141592653589793238463,
    3: 4.188790204786390984617,
    4: 4.934802200544679309417,
    16: 0.2353306303588932045419,
}


def test_unit_ball_volume_known_values():
    assert unit_ball_volume(1) == pytest.approx(2.0, rel=1e-15)
    assert abs(unit_ball_volume(2) - math.pi) < 1e-15
    assert abs(unit_ball_volume(3) - 4 * math.pi / 3) < 1e-14


def test_unit_ball_volume_monte_carlo_d3():
    # independent sampling oracle for omega_3
    rng = np.random.default_rng(12345)
    pts = rng.uniform(-1.0, 1.0, size=(400_000, 3))
    inside = np.sum(np.sum(pts * pts, axis=1) <= 1.0)
    est = 8.0 * inside / len(pts)
    assert abs(est - unit_ball_volume(3)) < 0.02


@pytest.mark.parametrize("d", sorted(OMEGA_ORACLE))
def test_unit_ball_volume_oracle(d):
    assert unit_ball_volume(d) == pytest.approx(OMEGA_ORACLE[d], rel=1e-14)


def test_unit_ball_volume_recursion():
    for d in range(2, 17):
        rhs = (
            unit_ball_volume(d - 1)
            * math.sqrt(math.pi)
            * math.gamma((d + 1) / 2)
            / math.gamma(d / 2 + 1)
        )
        assert abs(unit_ball_volume(d) - rhs) < 1e-12 * unit_ball_volume(d)


def test_unit_ball_volume_rejects_out_of_range():
    with pytest.raises(ValueError):
        unit_ball_volume(0)
    with pytest.raises(ValueError):
        unit_ball_volume(17)


@pytest.mark.parametrize("d", sorted(LAMBDA_GN_ORACLE))
def test_lambda_gn_oracle(d):
    assert lambda_gn(d) == pytest.approx(LAMBDA_GN_ORACLE[d], rel=1e-12)


def test_lambda_gn_d2_closed_form():
    # Gamma(1/2)/Gamma(3/2) = 2 and Gamma(2)/Gamma(1) = 1
    assert abs(lambda_gn(2) - math.sqrt(2.0) * (4 * math.pi) ** -0.25) < 1e-14


def test_lambda_gn_below_three_halves():
    for d in range(1, 17):
        assert lambda_gn(d) < 1.5


def test_mt_constant_monotone_and_bounded_below():
    vals = [mt_constant(d) for d in range(1, 17)]
    for a, b in zip(vals, vals[1:]):
        assert b > a
    # the 2 sqrt(pi) floor genuinely fails at d=1: (2pi)/omega_1 = pi.
    # Pin the exception so any change in convention gets noticed, and
    # check the slack arithmetic that keeps the d=1 bound constants valid.
    assert vals[0] == pytest.approx(math.pi, rel=1e-14)
    assert vals[0] < 2 * math.sqrt(math.pi)
    assert all(v >= 2 * math.sqrt(math.pi) for v in vals[1:])
    t = math.pi
    point_bound_coeff = 2 * lambda_gn(1) ** 4 * 256 / (t * math.exp(t)) + 1
    assert point_bound_coeff <= 22.0
    u = math.log(4.0)
    log_bound_coeff = (4.0 / 3.0) * (1 + (1 + math.log(22.0) + 4 * u) / t) / u
    assert log_bound_coeff <= 4.0


def test_semiclassical_weight_is_reciprocal():
    for d in (1, 2, 5):
        assert semiclassical_weight(d) * mt_constant(d) == pytest.approx(1.0, rel=1e-15)


def test_bessel_j_against_scipy():
    xs = np.linspace(0.05, 60.0, 241)
    for m in (0, 1, 2, 5, 10, 20):
        ref = scipy.special.jv(m, xs)
        got = np.array([bessel_j(m, float(x)) for x in xs])
        # recurrence amplification peaks right at the series/asymptotic
        # switch for m=20; stays far below anything the root finder needs
        assert np.max(np.abs(got - ref)) < 5e-10


def test_bessel_j_accuracy_near_zeros():
    # the zero finder only evaluates near sign changes; there the error
    # budget must support 1e-10 roots
    for m in (0, 2, 10, 20):
        zs = scipy.special.jn_zeros(m, 60)
        for z in zs:
            for dx in (-0.3, 0.05):
                x = float(z + dx)
                assert abs(bessel_j(m, x) - scipy.special.jv(m, x)) < 5e-12


def test_bessel_branch_agreement_at_switch():
    # series and asymptotic branches must agree at the switch point
    from mtlab.constants import _j01_asymptotic, _j01_series

    for m in (0, 1):
        assert abs(_j01_series(m, 12.0) - _j01_asymptotic(m, 12.0)) < 1e-11


def test_bessel_zero_reference_values():
    assert bessel_zero(0, 1) == pytest.approx(2.404825557695773, abs=1e-10)
    assert bessel_zero(0, 2) == pytest.approx(5.520078110286311, abs=1e-10)
    assert bessel_zero(1, 1) == pytest.approx(3.831705970207512, abs=1e-10)


def test_bessel_zero_against_scipy_table():
    for m in (0, 1, 2, 7, 20):
        ref = scipy.special.jn_zeros(m, 50)
        got = [bessel_zero(m, k) for k in range(1, 51)]
        assert np.max(np.abs(np.array(got) - ref)) < 1e-9


def test_bessel_zero_spacing_tends_to_pi():
    zs = [bessel_zero(0, k) for k in range(1, 101)]
    gaps = np.diff(zs)
    assert np.all(gaps > 0)
    assert abs(gaps[-1] - math.pi) < 1e-3


def test_bessel_zero_rejects_out_of_range():
    with pytest.raises(ValueError):
        bessel_zero(21, 1)
    with pytest.raises(ValueError):
        bessel_zero(0, 201)
    with pytest.raises(ValueError):
        bessel_zero(0, 0)


def test_constants_bundle():
    c = SemiclassicalConstants.for_dimension(2)
    assert c.omega_d == pytest.approx(math.pi)
    assert c.mt_constant == pytest.approx(4 * math.pi)
    assert c.lambda_d == pytest.approx(LAMBDA_GN_ORACLE[2], rel=1e-12)
    assert 2.404 < c.z01 < 2.405
