"""Bessel pairs: closed-form catalog, ODE residual and a shooting checker.

A pair (V, W) on (0, R) comes with a positive solution phi of

    (r^{N-1} V phi')' + r^{N-1} W phi = 0.

The catalog entries carry closed forms for V, W, phi and phi'.  The
checker integrates the divergence-form system

    phi' = p / (r^{N-1} V),    p' = -r^{N-1} W phi

from a small radius with phi = 1, p = 0 and reports any sign change of phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from . import exprlang, specfun
from .geometry import xcothx_minus_one

Fn = Callable[[np.ndarray], np.ndarray]


class PairError(ValueError):
    """Unknown catalog id or parameters outside the admissible range."""


class StepUnderflowError(RuntimeError):
    """The adaptive stepper could not make progress."""

    def __init__(self, message: str, last_r: float):
        super().__init__(f"{message} (last good r={last_r!r})")
        self.last_r = last_r


@dataclass(frozen=True)
class BesselPair:
    id: str
    N: int
    R: float                 # right end of the interval, may be inf
    V: Fn
    W: Fn
    phi: Fn
    dphi: Fn
    monotone: bool           # phi nonincreasing on (0, R)
    params: Mapping[str, float] = field(default_factory=dict)
    provenance: str = "catalog"
    exprs: Mapping[str, str] = field(default_factory=dict)
    zero_at_R: bool = False  # phi vanishes at R (log and Bessel-zero pairs)

    def flux(self, r):
        r = np.asarray(r, dtype=float)
        return r ** (self.N - 1) * self.V(r) * self.dphi(r)


# -- small special helpers ---------------------------------------------------

def csch2_minus_inv2(x):
    """1/sinh(x)^2 - 1/x^2, with a series below 0.1."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = -1.0 / 3.0 + x2 * (1.0 / 15.0 + x2 * (-2.0 / 189.0 + x2 * (1.0 / 675.0
             + x2 * (-2.0 / 10395.0 + x2 * (1382.0 / 58046625.0)))))
    with np.errstate(all="ignore"):
        direct = 1.0 / np.sinh(x) ** 2 - 1.0 / x2
    return np.where(np.abs(x) < 0.1, series, direct)


# -- hyperbolic fundamental-solution profile G ------------------------------

CHEB_NODES = 4096
_GL64 = np.polynomial.legendre.leggauss(64)
_GL15 = np.polynomial.legendre.leggauss(15)


def _F(N: int, t):
    return (1.0 - t * t) ** (N - 2) / t ** (N - 1)


def _F_log(N: int, s):
    """F(t) dt in the variable s = ln t."""
    t = np.exp(s)
    return (-np.expm1(2.0 * s)) ** (N - 2) * t ** (2 - N)


def g_oracle(N: int, r) -> np.ndarray:
    """G(r) = int_r^1 F by a 64-point Gauss-Legendre rule in ln t, per point.

    Slow but independent of the cached interpolant.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x, w = _GL64
    a = np.log(r)[:, None]
    half = -0.5 * a
    s = half * (x[None, :] + 1.0) + a
    return (half[:, 0]) * (_F_log(N, s) @ w)


class GCache:
    """q(r) = r^{N-2} G(r) / (1-r^2)^{N-1} tabulated at Chebyshev points of
    [0, 1] and evaluated by barycentric interpolation.  q is bounded on
    [0, 1] with q(0) = 1/(N-2) and q(1) = 1/(2(N-1))."""

    def __init__(self, N: int, n: int = CHEB_NODES):
        self.N = N
        k = np.arange(n)
        # second-kind Chebyshev points mapped to [0, 1], increasing
        nodes = 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))
        x, w = _GL15
        inner = nodes[1:-1]
        # cumulative integral from 1 downward, segment by segment in ln t
        edges = np.concatenate([inner, [1.0]])
        lo = np.log(edges[:-1])
        hi = np.log(edges[1:])
        mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
        s = mid[:, None] + hw[:, None] * x[None, :]
        seg = hw * (_F_log(N, s) @ w)
        gin = np.cumsum(seg[::-1])[::-1]
        q = np.empty(n)
        q[0] = 1.0 / (N - 2)
        q[-1] = 1.0 / (2.0 * (N - 1))
        q[1:-1] = inner ** (N - 2) * gin / (1.0 - inner ** 2) ** (N - 1)
        self.nodes = nodes
        self.values = q
        bw = np.ones(n)
        bw[1::2] = -1.0
        bw[0] *= 0.5
        bw[-1] *= 0.5
        self.bary = bw

    def q(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        flat = r.reshape(-1)
        d = flat[:, None] - self.nodes[None, :]
        exact = d == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.bary[None, :] / d
            out = (c @ self.values) / c.sum(axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            out[hit] = self.values[np.argmax(exact[hit], axis=1)]
        return out.reshape(r.shape)

    def G(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.q(r) * (1.0 - r * r) ** (self.N - 1) / r ** (self.N - 2)


@lru_cache(maxsize=None)
def g_cache(N: int) -> GCache:
    return GCache(N)


def v2_weight(N: int, r, G=None):
    """V_2 = F^2 (1-r^2)^2 / (4 (N-2)^2 G^2)."""
    r = np.asarray(r, dtype=float)
    G = g_cache(N).G(r) if G is None else G
    return _F(N, r) ** 2 * (1.0 - r * r) ** 2 / (4.0 * (N - 2) ** 2 * G ** 2)


# -- catalog ----------------------------------------------------------------

CATALOG_IDS = (
    "euclid-power",
    "critical-log",
    "bv-bessel",
    "bv-bessel-alpha",
    "poincare-sobolev-phi",
    "hyperbolic-G",
    "poincare-bessel-R",
)

CATALOG_PARAMS = {
    "euclid-power": ("lambda",),
    "critical-log": ("R",),
    "bv-bessel": ("lambda", "R"),
    "bv-bessel-alpha": ("lambda", "alpha", "R"),
    "poincare-sobolev-phi": (),
    "hyperbolic-G": (),
    "poincare-bessel-R": ("R",),
}

CATALOG_RANGES = {
    "euclid-power": "lambda <= N-2",
    "critical-log": "R > 0",
    "bv-bessel": "lambda <= N-2, R > 0",
    "bv-bessel-alpha": "0 <= alpha <= (N-lambda-2)/2, R > 0",
    "poincare-sobolev-phi": "none",
    "hyperbolic-G": "interval (0, 1) of the ball chart",
    "poincare-bessel-R": "R > 0",
}


def _need_N(N) -> int:
    if int(N) != N or N < 3:
        raise PairError(f"N must be an integer >= 3, got {N!r}")
    return int(N)


def _need_R(params) -> float:
    R = float(params.get("R", 1.0))
    if not (math.isfinite(R) and R > 0.0):
        raise PairError(f"R must be finite and > 0, got {R!r}")
    return R


def _need_lambda(N: int, params) -> float:
    lam = float(params.get("lambda", 0.0))
    if not math.isfinite(lam) or lam > N - 2:
        raise PairError(f"lambda must satisfy lambda <= N-2 = {N - 2}, got {lam!r}")
    return lam


def catalog(pair_id: str, params: Mapping[str, float]) -> BesselPair:
    """Closed-form Bessel pair by id.  params must contain N."""
    if pair_id not in CATALOG_IDS:
        raise PairError(f"unknown pair id {pair_id!r}; known: {', '.join(CATALOG_IDS)}")
    if "N" not in params:
        raise PairError("parameter N is required")
    N = _need_N(params["N"])

    if pair_id == "euclid-power":
        lam = _need_lambda(N, params)
        nu = (N - lam - 2) / 2.0
        return BesselPair(
            pair_id, N, math.inf,
            V=lambda r: r ** (-lam),
            W=lambda r: nu * nu * r ** (-lam - 2.0),
            phi=lambda r: r ** (-nu),
            dphi=lambda r: -nu * r ** (-nu - 1.0),
            monotone=True,
            params={"N": N, "lambda": lam},
            exprs={"V": "r^(-lambda)", "W": "((N-lambda-2)/2)^2 * r^(-lambda-2)",
                   "phi": "r^((2-N+lambda)/2)"},
        )

    if pair_id == "critical-log":
        R = _need_R(params)

        def phi(r):
            return np.sqrt(np.abs(np.log(r / R)))

        def dphi(r):
            lg = np.log(r / R)
            return np.sign(lg) / (2.0 * r * np.sqrt(np.abs(lg)))

        return BesselPair(
            pair_id, N, R,
            V=lambda r: r ** (2.0 - N),
            W=lambda r: 1.0 / (4.0 * r ** N * np.log(r / R) ** 2),
            phi=phi, dphi=dphi, monotone=True,
            params={"N": N, "R": R},
            exprs={"V": "r^(2-N)", "W": "1 / (4 * r^N * ln(r/R)^2)", "phi": "sqrt(abs(ln(r/R)))"},
            zero_at_R=True,
        )

    if pair_id in ("bv-bessel", "bv-bessel-alpha"):
        lam = _need_lambda(N, params)
        R = _need_R(params)
        nu = (N - lam - 2) / 2.0
        if pair_id == "bv-bessel":
            alpha = 0.0
        else:
            alpha = float(params.get("alpha", 0.0))
            if not (0.0 <= alpha <= nu + 1e-15):
                raise PairError(f"alpha must satisfy 0 <= alpha <= (N-lambda-2)/2 = {nu}, got {alpha!r}")
        z = specfun.bessel_first_zero(alpha)
        k = z / R

        def phi(r):
            return r ** (-nu) * specfun.bessel_j_array(alpha, k * np.asarray(r, dtype=float))

        def dphi(r):
            r = np.asarray(r, dtype=float)
            j = specfun.bessel_j_array(alpha, k * r)
            dj = specfun.bessel_j_deriv_array(alpha, k * r)
            return r ** (-nu) * (-nu * j / r + k * dj)

        c2 = nu * nu - alpha * alpha
        out_params = {"N": N, "lambda": lam, "R": R}
        if pair_id == "bv-bessel-alpha":
            out_params["alpha"] = alpha
        return BesselPair(
            pair_id, N, R,
            V=lambda r: r ** (-lam),
            W=lambda r: r ** (-lam) * (c2 / r ** 2 + k * k),
            phi=phi, dphi=dphi, monotone=True,
            params=out_params,
            exprs={"V": "r^(-lambda)",
                   "W": f"r^(-lambda) * (((N-lambda-2)^2/4 - alpha^2) / r^2 + {z!r}^2 / R^2)",
                   "phi": f"r^((2-N+lambda)/2) * besselj(alpha, {z!r} * r / R)"},
            zero_at_R=True,
        )

    if pair_id == "poincare-sobolev-phi":
        half = (N - 1) / 2.0

        def phi(r):
            r = np.asarray(r, dtype=float)
            return (r / np.sinh(r)) ** half

        def dphi(r):
            r = np.asarray(r, dtype=float)
            # Phi'/Phi = (N-1)/2 (1 - r coth r)/r
            return phi(r) * half * (-xcothx_minus_one(r)) / r

        def W(r):
            r = np.asarray(r, dtype=float)
            D = xcothx_minus_one(r)
            bracket = -D / r ** 2 + 0.5 * (N - 3) * D * D / r ** 2 + D * D / r ** 2 + csch2_minus_inv2(r)
            return -half * bracket / r ** (N - 2)

        return BesselPair(
            pair_id, N, math.inf,
            V=lambda r: r ** (2.0 - N), W=W, phi=phi, dphi=dphi, monotone=True,
            params={"N": N},
            exprs={"V": "r^(2-N)",
                   "W": "-(N-1)/2 * ((1 - r*coth(r))/r^2 + (N-3)/2 * (1 - r*coth(r))^2/r^2"
                        " + coth(r)^2 - 2*coth(r)/r + 1/sinh(r)^2) / r^(N-2)",
                   "phi": "(r/sinh(r))^((N-1)/2)"},
        )

    if pair_id == "hyperbolic-G":
        cache = g_cache(N)

        def phi(r):
            return np.sqrt(cache.G(r))

        def dphi(r):
            r = np.asarray(r, dtype=float)
            return -_F(N, r) / (2.0 * np.sqrt(cache.G(r)))

        def W(r):
            r = np.asarray(r, dtype=float)
            G = cache.G(r)
            return _F(N, r) ** 2 / (4.0 * G * G) / (1.0 - r * r) ** (N - 2)

        return BesselPair(
            pair_id, N, 1.0,
            V=lambda r: (1.0 - np.asarray(r) ** 2) ** (2.0 - N), W=W, phi=phi, dphi=dphi,
            monotone=True, params={"N": N}, zero_at_R=True,
        )

    # poincare-bessel-R
    R = _need_R(params)
    z0 = specfun.bessel_first_zero(0.0)
    k = z0 / R
    return BesselPair(
        pair_id, N, R,
        V=lambda r: r ** (2.0 - N),
        W=lambda r: r ** (2.0 - N) * k * k,
        phi=lambda r: specfun.bessel_j_array(0.0, k * np.asarray(r, dtype=float)),
        dphi=lambda r: -k * specfun.bessel_j_array(1.0, k * np.asarray(r, dtype=float)),
        monotone=True, params={"N": N, "R": R},
        exprs={"V": "r^(2-N)", "W": f"r^(2-N) * {z0!r}^2 / R^2", "phi": f"besselj(0, {z0!r} * r / R)"},
        zero_at_R=True,
    )


# -- ODE residual -----------------------------------------------------------

FD_STEP = 1e-5


def ode_residual(p: BesselPair, r: float) -> float:
    """Central-difference defect of (r^{N-1} V phi')' + r^{N-1} W phi at r."""
    h = FD_STEP * r
    pts = np.array([r - h, r + h])
    fl = p.flux(pts)
    dflux = (fl[1] - fl[0]) / (2.0 * h)
    ra = np.array([r])
    return float(dflux + (r ** (p.N - 1) * p.W(ra) * p.phi(ra))[0])


def residual_scale(p: BesselPair, r: float) -> float:
    """Magnitude the residual is compared against: max(|r^{N-1} W phi|, |flux|/r)."""
    ra = np.array([r])
    a = abs(float((r ** (p.N - 1) * p.W(ra) * p.phi(ra))[0]))
    b = abs(float(p.flux(ra)[0])) / r
    return max(a, b)


# -- shooting checker -------------------------------------------------------

@dataclass(frozen=True)
class PairVerdict:
    is_pair: bool
    first_zero: float | None
    samples: tuple            # ((r, phi, p), ...) at accepted steps
    eps: float
    R: float
    N: int
    steps: int
    flux_integral_diverges_at_0: bool
    weight_integrable_at_0: bool

    def to_dict(self) -> dict:
        return {
            "is_pair": self.is_pair,
            "first_zero": self.first_zero,
            "eps": self.eps,
            "R": self.R,
            "N": self.N,
            "steps": self.steps,
            "flags": {
                "inverse_weight_integral_diverges_at_0": self.flux_integral_diverges_at_0,
                "weight_integrable_at_0": self.weight_integrable_at_0,
            },
        }


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)


def _scalar_fn(e: exprlang.Expr, bindings) -> Callable[[float], float]:
    f = exprlang.compile_expr(e, bindings)

    def call(r: float) -> float:
        v = float(f(r))
        if not math.isfinite(v):
            raise exprlang.DomainError("non-finite weight sample", exprlang.to_source(e))
        return v
    return call


def _hermite_root(r0, r1, y0, y1, d0, d1) -> float:
    """Root of the cubic Hermite interpolant on [r0, r1] with y0*y1 < 0."""
    h = r1 - r0

    def H(s):
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1

    lo, hi = 0.0, 1.0
    flo = y0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        fm = H(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return r0 + 0.5 * (lo + hi) * h


def _decade_flags(fn: Callable[[float], float], eps: float, R: float) -> tuple[bool, bool]:
    """Heuristic integrability flags near 0 from increments over successive decades."""
    from .quadrature import QuadratureSpec, integrate

    def inc(a, b, g):
        try:
            return integrate(np.vectorize(g), a, b, QuadratureSpec(abs_tol=1e-300, rel_tol=1e-8))[0]
        except Exception:
            return math.inf

    top = min(R, eps * 1000.0)
    if top <= eps * 100.0:
        return False, True
    d = [inc(eps * 10 ** k, eps * 10 ** (k + 1), fn) for k in range(3)]
    # a divergent integral at 0 has decade increments that do not shrink
    diverges = d[0] >= 0.5 * d[1] and d[1] >= 0.5 * d[2]
    return diverges, not diverges


def check_pair(V: exprlang.Expr, W: exprlang.Expr, R: float, N: int, eps: float | None = None,
               bindings: Mapping[str, float] | None = None, rtol: float = 1e-12,
               atol: float = 1e-14, max_steps: int = 200_000) -> PairVerdict:
    """Shoot phi from eps with phi = 1, p = 0 and report the first zero before R."""
    N = _need_N(N)
    R = float(R)
    if not (math.isfinite(R) and R > 0.0):
        raise ValueError(f"R must be finite and > 0, got {R!r}")
    eps = 1e-6 * R if eps is None else float(eps)
    if not (0.0 < eps < R):
        raise ValueError(f"eps must lie in (0, R), got {eps!r}")
    b = {"N": float(N), "R": R}
    b.update(bindings or {})
    Vf = _scalar_fn(V, b)
    Wf = _scalar_fn(W, b)
    n1 = N - 1

    def rhs(r, phi, p):
        v = Vf(r)
        if v <= 0.0:
            raise exprlang.DomainError(f"V must be positive, got {v!r} at r={r!r}", exprlang.to_source(V))
        rn = r ** n1
        return p / (rn * v), -rn * Wf(r) * phi

    r_end = R * (1.0 - 1e-9)
    r = eps
    y = (1.0, 0.0)
    k1 = rhs(r, *y)
    h = 1e-3 * eps
    samples = [(r, y[0], y[1])]
    zero = None
    steps = 0
    while r < r_end and steps < max_steps:
        h = min(h, r_end - r)
        if h <= 1e-15 * r:
            raise StepUnderflowError("step size underflow", r)
        ks = [k1]
        for i in range(1, 7):
            a = _A[i]
            yi0 = y[0] + h * sum(a[j] * ks[j][0] for j in range(i))
            yi1 = y[1] + h * sum(a[j] * ks[j][1] for j in range(i))
            ks.append(rhs(r + _C[i] * h, yi0, yi1))
        y5 = (y[0] + h * sum(_B5[j] * ks[j][0] for j in range(7)),
              y[1] + h * sum(_B5[j] * ks[j][1] for j in range(7)))
        y4 = (y[0] + h * sum(_B4[j] * ks[j][0] for j in range(7)),
              y[1] + h * sum(_B4[j] * ks[j][1] for j in range(7)))
        sc0 = atol + rtol * max(abs(y[0]), abs(y5[0]))
        sc1 = atol * max(1.0, abs(y[1])) + rtol * max(abs(y[1]), abs(y5[1]))
        err = math.sqrt(0.5 * (((y5[0] - y4[0]) / sc0) ** 2 + ((y5[1] - y4[1]) / sc1) ** 2))
        if not math.isfinite(err):
            h *= 0.25
            continue
        if err <= 1.0:
            r_new = r + h
            k_new = ks[6]  # FSAL: last stage is f at (r+h, y5)
            steps += 1
            if y5[0] <= 0.0 < y[0] or (y5[0] == 0.0):
                zero = r_new if y5[0] == 0.0 else _hermite_root(r, r_new, y[0], y5[0], k1[0], k_new[0])
                samples.append((r_new, y5[0], y5[1]))
                break
            r, y, k1 = r_new, y5, k_new
            samples.append((r, y[0], y[1]))
            fac = 0.9 * err ** -0.2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            h *= max(0.1, 0.9 * err ** -0.25)
    if steps >= max_steps and zero is None and r < r_end:
        raise StepUnderflowError("step budget exhausted", r)

    inv = lambda t: 1.0 / (t ** n1 * Vf(t))  # noqa: E731
    wgt = lambda t: t ** n1 * Vf(t)  # noqa: E731
    div, _ = _decade_flags(inv, eps, R)
    wdiv, _ = _decade_flags(wgt, eps, R)
    return PairVerdict(
        is_pair=zero is None, first_zero=zero, samples=tuple(samples), eps=eps, R=R, N=N,
        steps=steps, flux_integral_diverges_at_0=div, weight_integrable_at_0=not wdiv,
    )
