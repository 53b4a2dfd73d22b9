"""Rayleigh quotients along concentrating trial families.

Trial functions near the extremal shape decay or grow like powers and
exponentials, so every integral is taken in s = ln(rho) with the large
factors kept as logarithms.  A profile is written g = exp(P(s)) * h(s) and
supplies (P, h, dg/ds * exp(-P)); the quadrature never forms exp(P) alone.
Below s = S_MIN the integrand is a pure power of rho and is added in closed
form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import specfun
from .geometry import ModelManifold
from .identities import TestProfile
from .quadrature import QuadratureSpec, integrate

S_MIN = -700.0
SCAN_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=4000)

DERIV = "deriv"
VALUE = "value"


class ZeroDenominatorError(ValueError):
    """The quotient's denominator integral is not positive."""


@dataclass(frozen=True)
class QTerm:
    coef: float
    log_weight: Callable[[np.ndarray], np.ndarray]  # log of the weight, as a function of s
    functional: str                                  # DERIV: (dg/drho)^2, VALUE: g^2


@dataclass(frozen=True)
class QuotientSpec:
    name: str
    numerator: tuple
    denominator: tuple


@dataclass(frozen=True)
class TrialProfile:
    """g(e^s) = exp(P(s)) h(s) on s in (s_lo, s_hi); parts(s) -> (P, h, hs) with dg/ds = exp(P) hs."""

    parts: Callable[[np.ndarray], tuple]
    s_hi: float
    s_lo: float = -math.inf
    label: str = ""
    breaks: tuple = ()  # interior points where h changes shape; quadrature splits there


@dataclass(frozen=True)
class TrialFamily:
    name: str
    N: int
    b: float
    target_constant: float
    quotient: QuotientSpec
    generator: Callable[[int], TrialProfile]
    params: dict


def _smoothstep_down(t):
    """1 for t <= 0, 0 for t >= 1, C^2 quintic in between; returns (value, d/dt)."""
    t = np.clip(t, 0.0, 1.0)
    v = 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
    dv = -30.0 * t * t * (1.0 - t) ** 2
    return v, dv


def log_sn(m: ModelManifold, s):
    """ln sn_b(e^s) without overflow for large radii."""
    s = np.asarray(s, dtype=float)
    if m.b == 0.0:
        return s * 1.0
    sb = math.sqrt(m.b)
    x = sb * np.exp(s)
    small = x < 1.0
    xs = np.where(small, x, 1.0)
    xl = np.where(small, 1.0, x)
    lo = s + np.log(np.sinh(xs) / xs)
    hi = xl - math.log(2.0) + np.log1p(-np.exp(-2.0 * xl)) - math.log(sb)
    return np.where(small, lo, hi)


def _term_integrand(t: QTerm, m: ModelManifold, f: TrialProfile):
    def fn(s):
        s = np.asarray(s, dtype=float)
        P, h, hs = f.parts(s)
        base = 2.0 * P + t.log_weight(s) + (m.N - 1) * log_sn(m, s)
        if t.functional == DERIV:
            # (dg/drho)^2 drho = exp(2P) hs^2 exp(-s) ds
            return t.coef * hs * hs * np.exp(base - s)
        return t.coef * h * h * np.exp(base + s)
    return fn


def _integral(terms: Sequence[QTerm], m: ModelManifold, f: TrialProfile, quad: QuadratureSpec) -> float:
    total = 0.0
    lo = max(f.s_lo, S_MIN)
    for t in terms:
        fn = _term_integrand(t, m, f)
        knots = [lo] + sorted(x for x in f.breaks if lo < x < f.s_hi) + [f.s_hi]
        val = sum(integrate(fn, p, q, quad)[0] for p, q in zip(knots, knots[1:]))
        if f.s_lo < S_MIN:
            # pure power e^{kappa s} below S_MIN
            y0, y1 = float(fn(np.array([S_MIN]))[0]), float(fn(np.array([S_MIN + 1.0]))[0])
            if y0 != 0.0:
                ratio = y1 / y0
                kappa = math.log(ratio) if ratio > 0.0 else -math.inf
                if not kappa > 0.0:
                    raise ValueError(f"term integrand does not decay toward rho = 0 (kappa={kappa})")
                val += y0 / kappa
        total += val
    return total


def rayleigh(q: QuotientSpec, m: ModelManifold, f, quad: QuadratureSpec = SCAN_QUAD) -> float:
    """numerator / denominator for profile f (TrialProfile or compactly supported TestProfile)."""
    if isinstance(f, TestProfile):
        f = from_test_profile(f)
    den = _integral(q.denominator, m, f, quad)
    if not den > 0.0:
        raise ZeroDenominatorError(f"denominator of {q.name} is {den!r}")
    return _integral(q.numerator, m, f, quad) / den


def from_test_profile(p: TestProfile) -> TrialProfile:
    if p.ell != 0:
        raise ValueError("quotients here are radial; use ell = 0")

    def parts(s):
        r = np.exp(s)
        g, dg = p.radial(r)
        return np.zeros_like(s), g, r * dg

    a, b = p.support
    return TrialProfile(parts, math.log(b), math.log(a), label=p.label())


# -- quotients --------------------------------------------------------------

def hardy_quotient(lam: float = 0.0) -> QuotientSpec:
    return QuotientSpec(
        f"hardy(lambda={lam})",
        (QTerm(1.0, lambda s: -lam * s, DERIV),),
        (QTerm(1.0, lambda s: -(lam + 2.0) * s, VALUE),),
    )


def poincare_quotient() -> QuotientSpec:
    zero = lambda s: np.zeros_like(s)  # noqa: E731
    return QuotientSpec("poincare", (QTerm(1.0, zero, DERIV),), (QTerm(1.0, zero, VALUE),))


def bessel_ball_quotient(N: int, lam: float = 0.0) -> QuotientSpec:
    nu = (N - lam - 2) / 2.0
    return QuotientSpec(
        f"bessel-ball(lambda={lam})",
        (QTerm(1.0, lambda s: -lam * s, DERIV), QTerm(-nu * nu, lambda s: -(lam + 2.0) * s, VALUE)),
        (QTerm(1.0, lambda s: -lam * s, VALUE),),
    )


# -- trial profiles ---------------------------------------------------------

def hardy_trial(N: int, eps: float, hi: float, width: float, lam: float = 0.0) -> TrialProfile:
    """rho^{-nu+eps} times a cutoff falling from 1 to 0 over ln rho in [ln hi - width, ln hi]."""
    nu = (N - lam - 2) / 2.0
    a = -nu + eps
    s_hi = math.log(hi)
    s0 = s_hi - width

    def parts(s):
        eta, deta = _smoothstep_down((s - s0) / width)
        return a * s, eta, deta / width + a * eta

    return TrialProfile(parts, s_hi, label=f"hardy:eps={eps!r},hi={hi!r},width={width!r}", breaks=(s0,))


def poincare_trial(N: int, k: int) -> TrialProfile:
    """exp(-(N-1) rho/2 + rho/k) with a cutoff falling over rho in [k, 2k]."""
    a = -(N - 1) / 2.0 + 1.0 / k

    def parts(s):
        r = np.exp(s)
        eta, deta = _smoothstep_down((r - k) / k)
        return a * r, eta, r * (deta / k + a * eta)

    return TrialProfile(parts, math.log(2.0 * k), label=f"poincare:k={k}", breaks=(math.log(k),))


def bessel_trial(N: int, k: int, R: float, lam: float = 0.0) -> TrialProfile:
    """rho^{-nu+1/k} J0(z0 rho/R), which vanishes at rho = R."""
    nu = (N - lam - 2) / 2.0
    z = specfun.bessel_first_zero(0.0) / R
    a = -nu + 1.0 / k

    def parts(s):
        r = np.exp(s)
        j = specfun.bessel_j_array(0.0, z * r)
        dj = -z * specfun.bessel_j_array(1.0, z * r)
        return a * s, j, r * dj + a * j

    return TrialProfile(parts, math.log(R), label=f"bessel:k={k},R={R!r}")


# -- families ---------------------------------------------------------------

def hardy_family(N: int, b: float = 1.0, lam: float = 0.0, hi: float = 0.5) -> TrialFamily:
    """eps = 1/k and a log-scale cutoff of width sqrt(k) below hi."""
    nu = (N - lam - 2) / 2.0
    if not nu > 0:
        raise ValueError("need lambda < N-2")
    return TrialFamily(
        "hardy-hyperbolic" if b > 0 else "hardy-euclidean", N, b, nu * nu, hardy_quotient(lam),
        lambda k: hardy_trial(N, 1.0 / k, hi, math.sqrt(k), lam), {"lambda": lam, "hi": hi},
    )


def poincare_family(N: int, b: float = 1.0) -> TrialFamily:
    if b != 1.0:
        raise ValueError("the Poincare family is set up for b = 1")
    return TrialFamily("poincare", N, b, ((N - 1) / 2.0) ** 2, poincare_quotient(),
                       lambda k: poincare_trial(N, k), {})


def bessel_family(N: int, R: float = 1.0, lam: float = 0.0) -> TrialFamily:
    z = specfun.bessel_first_zero(0.0)
    return TrialFamily("bv-ball", N, 0.0, z * z / (R * R), bessel_ball_quotient(N, lam),
                       lambda k: bessel_trial(N, k, R, lam), {"R": R, "lambda": lam})


TARGETS = {
    "hardy-hyperbolic": lambda N, **kw: hardy_family(N, b=1.0, **kw),
    "hardy-euclidean": lambda N, **kw: hardy_family(N, b=0.0, **kw),
    "poincare": lambda N, **kw: poincare_family(N, **kw),
    "bv-ball": lambda N, **kw: bessel_family(N, **kw),
}


def family(target: str, N: int, **kw) -> TrialFamily:
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; known: {', '.join(TARGETS)}")
    return TARGETS[target](N, **kw)


@dataclass(frozen=True)
class ScanResult:
    family: str
    N: int
    b: float
    target: float
    series: tuple          # ((k, quotient), ...)
    min_quotient: float
    ratio: float           # min_quotient / target

    def to_dict(self) -> dict:
        return {"family": self.family, "N": self.N, "b": self.b, "target": self.target,
                "series": [{"k": k, "quotient": q} for k, q in self.series],
                "min_quotient": self.min_quotient, "ratio": self.ratio}


def sharpness_scan(fam: TrialFamily, m: ModelManifold | None = None, k_max: int = 64,
                   ks: Sequence[int] | None = None) -> ScanResult:
    """Quotients for k = 1..k_max (or the given ks)."""
    if k_max < 3:
        raise ValueError("k_max must be >= 3")
    if m is None:
        m = ModelManifold(fam.N, fam.b)
    if m.N != fam.N or m.b != fam.b:
        raise ValueError("manifold does not match the family")
    ks = list(range(1, k_max + 1)) if ks is None else list(ks)
    series = tuple((k, rayleigh(fam.quotient, m, fam.generator(k))) for k in ks)
    qmin = min(q for _, q in series)
    return ScanResult(fam.name, fam.N, fam.b, fam.target_constant, series, qmin, qmin / fam.target_constant)


def nelder_mead_hardy(N: int, b: float = 1.0, lam: float = 0.0, x0=(0.1, 0.5, 2.0), maxiter: int = 200):
    """Minimise the Hardy quotient over (eps, hi, width) of hardy_trial.

    Returns (quotient, (eps, hi, width)).  Used to cross-check the fixed family.
    """
    from scipy.optimize import minimize

    m = ModelManifold(N, b)
    q = hardy_quotient(lam)

    def unpack(x):
        # eps in (0.01, 1), hi in (0, 5), width in (0.2, 50); eps -> 0 is not integrable
        sig = lambda t: 1.0 / (1.0 + math.exp(-t))  # noqa: E731
        return 0.01 + 0.99 * sig(x[0]), 5.0 * sig(x[1]), 0.2 + 49.8 * sig(x[2])

    def obj(x):
        return rayleigh(q, m, hardy_trial(N, *unpack(x), lam=lam))

    e0, h0, w0 = x0
    start = [math.log((e0 - 0.01) / (1 - e0)), math.log(h0 / (5 - h0)), math.log((w0 - 0.2) / (50 - w0))]
    res = minimize(obj, start, method="Nelder-Mead",
                   options={"maxiter": maxiter, "xatol": 1e-4, "fatol": 1e-10})
    return float(res.fun), unpack(res.x)
