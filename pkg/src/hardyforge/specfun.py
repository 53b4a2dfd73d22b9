"""Bessel functions of the first kind, their zeros, and sphere areas.

J_alpha(x) is evaluated by the ascending series for x < max(12, 2*alpha) and
by Miller's backward recurrence (normalised with the Neumann-type sum
(x/2)^a / Gamma(a+1) = sum_k d_k J_{a+2k}(x)) above that switch point.

The series is summed in double-double arithmetic so that the cancellation
between terms of size ~I_alpha(x) does not eat the absolute accuracy.
"""

from __future__ import annotations

import functools
import math

import numpy as np

MAX_ORDER = 20.0


class DomainError(ValueError):
    """Raised when an argument lies outside a function's real domain."""


# -- double-double helpers (vectorised) -------------------------------------

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _two_prod(a, b):
    p = a * b
    ta = _SPLIT * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLIT * b
    bhi = tb - (tb - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def _dd_add(ahi, alo, bhi, blo):
    s, e = _two_sum(ahi, bhi)
    e = e + alo + blo
    return _two_sum(s, e)


def _dd_mul(ahi, alo, bhi, blo):
    p, e = _two_prod(ahi, bhi)
    e = e + ahi * blo + alo * bhi
    return _two_sum(p, e)


def _dd_div(ahi, alo, bhi, blo):
    q1 = ahi / bhi
    phi, plo = _dd_mul(q1, 0.0 * q1, bhi, blo)
    rhi, rlo = _dd_add(ahi, alo, -phi, -plo)
    q2 = rhi / bhi
    phi, plo = _dd_mul(q2, 0.0 * q2, bhi, blo)
    rhi, rlo = _dd_add(rhi, rlo, -phi, -plo)
    q3 = rhi / bhi
    hi, lo = _two_sum(q1, q2)
    return _dd_add(hi, lo, q3, 0.0 * q3)


def _series_sum(alpha: float, x: np.ndarray) -> np.ndarray:
    """sum_k (-x^2/4)^k / (k! (alpha+1)_k) in double-double precision."""
    yhi, ylo = _two_prod(x, x)
    yhi, ylo = -0.25 * yhi, -0.25 * ylo
    thi = np.ones_like(x)
    tlo = np.zeros_like(x)
    shi = np.ones_like(x)
    slo = np.zeros_like(x)
    tmax = np.ones_like(x)
    k = 0
    while True:
        k += 1
        # divisor k*(k+alpha) as an exact double-double
        ka, ka_err = _two_sum(float(k), alpha)
        khi, klo = _two_prod(float(k), ka)
        khi, klo = _dd_add(khi, klo, float(k) * ka_err, 0.0)
        thi, tlo = _dd_mul(thi, tlo, yhi, ylo)
        thi, tlo = _dd_div(thi, tlo, khi + 0.0 * x, klo + 0.0 * x)
        shi, slo = _dd_add(shi, slo, thi, tlo)
        tmax = np.maximum(tmax, np.abs(thi))
        if k > 4 and np.all(np.abs(thi) <= 1e-33 * tmax):
            break
        if k > 400:
            break
    return shi + slo


def _j_series(alpha: float, x: np.ndarray) -> np.ndarray:
    s = _series_sum(alpha, x)
    if alpha == 0.0:
        return s
    with np.errstate(divide="ignore"):
        pref = np.exp(alpha * np.log(0.5 * x) - math.lgamma(alpha + 1.0))
    pref = np.where(x == 0.0, 0.0, pref)
    return pref * s


def _j_miller(alpha: float, x: np.ndarray) -> np.ndarray:
    """Backward recurrence from a high starting index, normalised by the
    sum (x/2)^alpha / Gamma(alpha+1) = sum_k d_k J_{alpha+2k}(x)."""
    xmax = float(np.max(x))
    m = int(xmax + 20.0 + 12.0 * xmax ** (1.0 / 3.0) + alpha)
    m += m % 2
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    target = np.zeros_like(x)
    # d_k for the normalisation, k = j/2 for even offsets j
    for j in range(m, -1, -1):
        order = alpha + j
        if j % 2 == 0:
            kk = j // 2
            if kk == 0:
                dk = 1.0
            else:
                dk = (alpha + 2 * kk) * math.exp(
                    math.lgamma(alpha + kk) - math.lgamma(alpha + 1.0) - math.lgamma(kk + 1.0)
                )
            norm = norm + dk * cur
        if j == 0:
            target = cur
            break
        prev = (2.0 * order / x) * cur - nxt
        nxt, cur = cur, prev
        big = np.abs(cur) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            cur = cur * scale
            nxt = nxt * scale
            norm = norm * scale
    lhs = np.exp(alpha * np.log(0.5 * x) - math.lgamma(alpha + 1.0))
    return target * lhs / norm


def _check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 0.0:
        raise DomainError(f"Bessel order must be finite and >= 0, got {alpha!r}")
    if alpha > MAX_ORDER:
        raise DomainError(f"Bessel order above {MAX_ORDER} is not supported, got {alpha!r}")
    return alpha


def bessel_j_array(alpha: float, x) -> np.ndarray:
    """Vectorised J_alpha on an array of non-negative arguments."""
    return _j(_check_order(alpha), x)


def _j(alpha: float, x) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa < 0.0):
        raise DomainError("Bessel argument must be finite and >= 0")
    flat = xa.reshape(-1)
    out = np.empty_like(flat)
    switch = max(12.0, 2.0 * alpha)
    low = flat < switch
    if np.any(low):
        out[low] = _j_series(alpha, flat[low])
    if np.any(~low):
        out[~low] = _j_miller(alpha, flat[~low])
    return out.reshape(xa.shape)


def bessel_j(alpha: float, x: float) -> float:
    """J_alpha(x) for alpha in [0, 20] and x >= 0."""
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"Bessel argument must be finite and >= 0, got {x!r}")
    return float(bessel_j_array(alpha, np.array([x]))[0])


def bessel_j_deriv_array(alpha: float, x) -> np.ndarray:
    """Vectorised dJ_alpha/dx."""
    alpha = _check_order(alpha)
    xa = np.asarray(x, dtype=float)
    if alpha < 1.0 and np.any(xa <= 0.0):
        raise DomainError("derivative of J_alpha needs x > 0 when alpha < 1")
    if alpha == 0.0:
        return -_j(1.0, xa)
    if alpha >= 1.0:
        return 0.5 * (_j(alpha - 1.0, xa) - _j(alpha + 1.0, xa))
    return (alpha / xa) * _j(alpha, xa) - _j(alpha + 1.0, xa)


def bessel_j_deriv(alpha: float, x: float) -> float:
    """dJ_alpha/dx by the standard recurrences (J_0' = -J_1)."""
    return float(bessel_j_deriv_array(alpha, np.array([float(x)]))[0])


@functools.lru_cache(maxsize=128)
def bessel_first_zero(alpha: float) -> float:
    """Smallest positive root of J_alpha: 0.1-step scan, bisection, Newton."""
    alpha = _check_order(alpha)
    step = 0.1
    limit = alpha + 20.0
    a = step
    fa = bessel_j(alpha, a)
    bracket = None
    while a < limit:
        b = a + step
        fb = bessel_j(alpha, b)
        if fa == 0.0:
            return a
        if fa * fb < 0.0:
            bracket = (a, b, fa)
            break
        a, fa = b, fb
    if bracket is None:
        raise RuntimeError(f"no sign change of J_{alpha} found on (0, {limit}]")
    lo, hi, flo = bracket
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = bessel_j(alpha, mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-6:
            break
    z = 0.5 * (lo + hi)
    for _ in range(20):
        dz = bessel_j(alpha, z) / bessel_j_deriv(alpha, z)
        z -= dz
        if abs(dz) <= 1e-16 * z:
            break
    return z


def gamma_half_integer(n2: int) -> float:
    """Gamma(n2/2) for a positive integer n2, by recursion from Gamma(1) and Gamma(1/2)."""
    if n2 < 1:
        raise DomainError("argument must be a positive half-integer")
    if n2 % 2 == 0:
        val = 1.0
        k = 1.0
    else:
        val = math.sqrt(math.pi)
        k = 0.5
    target = n2 / 2.0
    while k < target:
        val *= k
        k += 1.0
    return val


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere S^{N-1} in R^N."""
    if int(N) != N or N < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {N!r}")
    N = int(N)
    return 2.0 * math.pi ** (N / 2.0) / gamma_half_integer(N)
