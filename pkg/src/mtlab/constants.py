"""Special constants for the semiclassical bounds.

Everything here is a pure function of the dimension d or of Bessel
indices: unit-ball volumes, the Gagliardo-Nirenberg-type constant
controlling the spectral-gap step, and zeros of integer-order Bessel
functions (needed for the Faber-Krahn constant and the disk
eigenbasis).  Double precision throughout; accuracy targets are stated
per function and validated against high-precision fixtures in the
tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

D_MAX = 16
BESSEL_M_MAX = 20
BESSEL_K_MAX = 200

# first positive zero of J_0, cross-checked against bessel_zero(0, 1)
Z01 = 2.404825557695773


def unit_ball_volume(d: int) -> float:
    """Volume omega_d = pi^(d/2) / Gamma(d/2 + 1) of the unit ball in R^d.

    Args:
        d: dimension, 1 <= d <= 16.

    Returns:
        omega_d as a float (omega_1 = 2, omega_2 = pi, ...).
    """
    if not 1 <= d <= D_MAX:
        raise ValueError(f"dimension {d} outside supported range 1..{D_MAX}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def mt_constant(d: int) -> float:
    """(2 pi)^d / omega_d, the reciprocal semiclassical weight.

    Monotone increasing in d.  Note it is >= 2 sqrt(pi) only from d=2 on;
    at d=1 the value is exactly pi, which sits below 2 sqrt(pi).  The
    bound-constant arithmetic that nominally invokes the 2 sqrt(pi)
    floor retains enough slack that the d=1 results are unaffected (see
    the pinned checks in the tests).
    """
    return (2.0 * math.pi) ** d / unit_ball_volume(d)


def semiclassical_weight(d: int) -> float:
    """omega_d / (2 pi)^d; multiplies alpha in the log-scaled bounds."""
    return unit_ball_volume(d) / (2.0 * math.pi) ** d


def lambda_gn(d: int) -> float:
    """The constant Lambda_d of the spectral-gap (lowest-eigenvalue) bound.

    Lambda_d = (4 pi)^(-d/8) * (Gamma(d/4)/Gamma(3d/4))^(1/2)
               * (Gamma(d)/Gamma(d/2))^(1/4),
    evaluated via log-Gamma to keep relative error near 1e-15 over the
    whole supported range.  Stays below 3/2 for every d in 1..16.
    """
    if not 1 <= d <= D_MAX:
        raise ValueError(f"dimension {d} outside supported range 1..{D_MAX}")
    ln_val = (
        -(d / 8.0) * math.log(4.0 * math.pi)
        + 0.5 * (math.lgamma(d / 4.0) - math.lgamma(3.0 * d / 4.0))
        + 0.25 * (math.lgamma(float(d)) - math.lgamma(d / 2.0))
    )
    return math.exp(ln_val)


# ---------------------------------------------------------------------------
# Bessel functions of integer order and their zeros.
#
# J_0 and J_1 are evaluated by power series below x = 12 and by the Hankel
# asymptotic expansion above; higher orders come from the three-term upward
# recurrence, which is stable in the region x > m where all zeros live.
# The series/asymptotic switch point is validated in the tests (both
# branches agree to better than 1e-11 at x = 12).

_SERIES_SWITCH = 12.0


def _j01_series(m: int, x: float) -> float:
    # power series (x/2)^m sum_j (-1)^j (x^2/4)^j / (j! (j+m)!)
    q = 0.25 * x * x
    term = 1.0
    acc = 1.0
    for j in range(1, 80):
        term *= -q / (j * (j + m))
        acc += term
        if abs(term) < 1e-18 * abs(acc):
            break
    return acc * (0.5 * x) ** m / math.factorial(m)


def _j01_asymptotic(m: int, x: float) -> float:
    # Hankel expansion: J_m ~ sqrt(2/(pi x)) (P cos w - Q sin w),
    # w = x - (2m+1) pi/4; safe for m <= 1 once x >= 12
    mu = 4.0 * m * m
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    sign_p, sign_q = -1.0, 1.0
    for k in range(1, 30):
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if k % 2 == 0:
            p_sum += sign_p * term
            sign_p = -sign_p
        else:
            q_sum += sign_q * term
            sign_q = -sign_q
        if abs(term) < 1e-17:
            break
    w = x - (2 * m + 1) * math.pi / 4.0
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(w) - q_sum * math.sin(w))


def bessel_j(m: int, x: float) -> float:
    """J_m(x) for integer m >= 0 and x >= 0, double precision.

    Accuracy degrades gracefully with m through the upward recurrence;
    in the zero-hunting region x > m it stays near 1e-12 absolute for
    m <= 20, which the root tolerance below budgets for.
    """
    if m < 0:
        raise ValueError("order must be nonnegative")
    if x < 0:
        raise ValueError("argument must be nonnegative")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x < _SERIES_SWITCH:
        # the series handles any order directly; no recurrence needed
        return _j01_series(m, x)
    if m <= 1:
        return _j01_asymptotic(m, x)
    # upward recurrence, stable here because all requested x >= 12 > m/2
    # and the admissible orders are small (m <= 20)
    jm_prev = _j01_asymptotic(0, x)
    jm = _j01_asymptotic(1, x)
    for order in range(1, m):
        jm_prev, jm = jm, (2.0 * order / x) * jm - jm_prev
    return jm


_zero_cache: dict[int, list[float]] = {}

_SCAN_STEP = 0.5  # well below the minimal zero spacing (about 3.1)


def bessel_zero(m: int, k: int) -> float:
    """k-th positive zero of J_m, absolute accuracy around 1e-10.

    Zeros are located by scanning for sign changes from just above x=m
    (J_m > 0 on (0, z_{m,1})) and polishing each bracket with Brent's
    method.  Results are cached per order.

    Args:
        m: Bessel order, 0 <= m <= 20.
        k: zero index, 1 <= k <= 200.
    """
    if not 0 <= m <= BESSEL_M_MAX:
        raise ValueError(f"order {m} outside supported range 0..{BESSEL_M_MAX}")
    if not 1 <= k <= BESSEL_K_MAX:
        raise ValueError(f"index {k} outside supported range 1..{BESSEL_K_MAX}")
    zeros = _zero_cache.setdefault(m, [])
    if len(zeros) >= k:
        return zeros[k - 1]
    x = zeros[-1] if zeros else max(float(m), 0.1)
    f_x = bessel_j(m, x) if zeros else 1.0
    if zeros:
        # step off the cached zero before resuming the scan
        x += 0.25 * _SCAN_STEP
        f_x = bessel_j(m, x)
    scan_limit = (k + m) * math.pi + 20.0
    while len(zeros) < k:
        x_next = x + _SCAN_STEP
        if x_next > scan_limit:
            raise RuntimeError(
                f"bracketing failed for J_{m} zero #{len(zeros) + 1}; "
                "evaluation suspect"
            )
        f_next = bessel_j(m, x_next)
        if f_x == 0.0:
            zeros.append(x)
        elif f_x * f_next < 0.0:
            root = brentq(lambda t: bessel_j(m, t), x, x_next, xtol=1e-13, rtol=1e-15)
            zeros.append(float(root))
        x, f_x = x_next, f_next
    return zeros[k - 1]


@dataclass(frozen=True)
class SemiclassicalConstants:
    """Bundle of the d-dependent constants used across the bound checks."""

    d: int
    omega_d: float
    mt_constant: float
    lambda_d: float
    z01: float

    @classmethod
    def for_dimension(cls, d: int) -> "SemiclassicalConstants":
        return cls(
            d=d,
            omega_d=unit_ball_volume(d),
            mt_constant=mt_constant(d),
            lambda_d=lambda_gn(d),
            z01=bessel_zero(0, 1),
        )
