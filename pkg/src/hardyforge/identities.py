"""Hardy identities reduced to one-dimensional integrals.

Test functions are separated, f = g(rho) Y_l(u) with Y_l an L^2-normalised
spherical harmonic, so that on the model of curvature -b

    int |grad f|^2 dV = int (g'^2 + L g^2 / sn_b^2) sn_b^{N-1} drho,
    int |d_rho f|^2 dV = int g'^2 sn_b^{N-1} drho,
    int |f|^2 dV      = int g^2 sn_b^{N-1} drho,

with L = l(l+N-2).  A case is a list of signed terms on each side; verify
integrates every term separately and compares the two sums.  The left and
right terms of each case are written out from their own closed forms, so a
pass is not a rearrangement of the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from . import besselpair, specfun
from .besselpair import BesselPair
from .geometry import (
    ModelManifold,
    angular_eigenvalue,
    ball_to_geodesic,
    log_density_deriv,
    metric_radius,
    volume_density,
)
from .quadrature import NonFiniteSampleError, QuadratureError, QuadratureSpec, integrate

GRAD_SQ = "GRAD_SQ"
RADIAL_SQ = "RADIAL_SQ"
VALUE_SQ = "VALUE_SQ"
LOGDERIV_SQ = "LOGDERIV_SQ"

DEFAULT_TOL = 1e-8
TERM_QUAD = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-12, max_subdivisions=4000)

Fn = Callable[[np.ndarray], np.ndarray]


class CaseError(ValueError):
    """Unknown case id, bad parameters, or a profile the case cannot accept."""


class TermQuadratureError(RuntimeError):
    def __init__(self, term: str, cause: Exception):
        super().__init__(f"quadrature failed for term '{term}': {cause}")
        self.term = term
        self.cause = cause


# -- test profiles ----------------------------------------------------------

PROFILE_KINDS = ("bump", "poly-bump", "skew-bump")


def _shape(kind: str, s: np.ndarray):
    """Shape and d/ds on |s| < 1, zero outside."""
    inside = np.abs(s) < 1.0
    t = np.where(inside, 1.0 - s * s, 1.0)
    if kind == "poly-bump":
        v = t ** 4
        dv = -8.0 * s * t ** 3
    else:
        with np.errstate(under="ignore"):
            e = np.exp(-1.0 / t)
        de = e * (-2.0 * s / (t * t))
        if kind == "bump":
            v, dv = e, de
        else:
            v = (1.0 + 0.5 * s) * e
            dv = 0.5 * e + (1.0 + 0.5 * s) * de
    return np.where(inside, v, 0.0), np.where(inside, dv, 0.0)


@dataclass(frozen=True)
class TestProfile:
    """Radial profile g on [c - w, c + w] and angular mode ell.

    With flat_at = R the integrated function is (r - R)^2 * shape, i.e.
    g - g(R) for g = value_at_R + (r - R)^2 * shape.
    """

    __test__ = False  # not a pytest class

    kind: str = "bump"
    c: float = 1.5
    w: float = 1.0
    ell: int = 0
    amp: float = 1.0
    flat_at: float | None = None
    value_at_R: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in PROFILE_KINDS:
            raise CaseError(f"unknown profile kind {self.kind!r}; known: {', '.join(PROFILE_KINDS)}")
        if not (self.w > 0.0 and math.isfinite(self.c) and math.isfinite(self.w)):
            raise CaseError("profile needs finite c and w > 0")
        if int(self.ell) != self.ell or self.ell < 0:
            raise CaseError(f"angular mode must be an integer >= 0, got {self.ell!r}")
        if self.c - self.w <= 0.0:
            raise CaseError("profile support must stay away from r = 0")

    @property
    def support(self) -> tuple[float, float]:
        return (self.c - self.w, self.c + self.w)

    def base(self, r):
        r = np.asarray(r, dtype=float)
        s = (r - self.c) / self.w
        v, dv = _shape(self.kind, s)
        return self.amp * v, self.amp * dv / self.w

    def radial(self, r):
        """(g, g') of the function that enters the integrals."""
        v, dv = self.base(r)
        if self.flat_at is None:
            return v, dv
        d = np.asarray(r, dtype=float) - self.flat_at
        return d * d * v, 2.0 * d * v + d * d * dv

    def label(self) -> str:
        s = f"{self.kind}:c={self.c!r},w={self.w!r}"
        if self.amp != 1.0:
            s += f",amp={self.amp!r}"
        if self.flat_at is not None:
            s += f",flat_at={self.flat_at!r},value_at_R={self.value_at_R!r}"
        return s

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "c": self.c, "w": self.w, "ell": self.ell, "amp": self.amp}
        if self.flat_at is not None:
            d["flat_at"] = self.flat_at
            d["value_at_R"] = self.value_at_R
        return d


def parse_profile(spec: str, ell: int = 0) -> TestProfile:
    """'bump:c=1.5,w=1.0' style profile spec."""
    kind, _, rest = spec.partition(":")
    kw: dict = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise CaseError(f"bad profile field {item!r}")
        key = key.strip()
        if key not in ("c", "w", "amp", "flat_at", "value_at_R", "ell"):
            raise CaseError(f"unknown profile field {key!r}")
        try:
            kw[key] = int(val) if key == "ell" else float(val)
        except ValueError:
            raise CaseError(f"profile field {key!r} needs a number, got {val!r}") from None
    kw.setdefault("ell", ell)
    return TestProfile(kind=kind.strip(), **kw)


# -- terms ------------------------------------------------------------------

Transform = Callable[[TestProfile, np.ndarray, np.ndarray, np.ndarray], tuple]


def _ident(prof, r, g, dg):
    return g, dg


def _times_pow(a: float) -> Transform:
    def tr(prof, r, g, dg):
        ra = r ** a
        return ra * g, a * r ** (a - 1.0) * g + ra * dg
    return tr


def _over(phi: Fn, dphi: Fn) -> Transform:
    def tr(prof, r, g, dg):
        p = phi(r)
        return g / p, (dg * p - g * dphi(r)) / (p * p)
    return tr


@dataclass(frozen=True)
class Term:
    name: str
    side: str                       # "lhs", "rhs" or "aux" (margins only)
    coef: float
    weight: Fn
    functional: str
    transform: Transform = _ident
    dlogphi: Fn | None = None       # phi'/phi for LOGDERIV_SQ
    b_override: float | None = None  # curvature used in J'/J for LOGDERIV_SQ
    tail: Callable[[TestProfile], float] | None = None  # closed-form part outside the support


def reduce(f: TestProfile, m: ModelManifold, term: Term) -> Fn:
    """The 1-D integrand coef * weight * functional * sn_b^{N-1} of one term."""
    L = angular_eigenvalue(m.N, f.ell)
    jm = m if term.b_override is None else ModelManifold(m.N, term.b_override)

    def integrand(r):
        r = np.asarray(r, dtype=float)
        g, dg = f.radial(r)
        h, dh = term.transform(f, r, g, dg)
        if term.functional == GRAD_SQ:
            sn = metric_radius(m, r)
            fun = dh * dh + L * h * h / (sn * sn)
        elif term.functional == RADIAL_SQ:
            fun = dh * dh
        elif term.functional == VALUE_SQ:
            fun = h * h
        elif term.functional == LOGDERIV_SQ:
            fun = h * h * term.dlogphi(r) * log_density_deriv(jm, r)
        else:  # pragma: no cover
            raise CaseError(f"unknown functional {term.functional}")
        return term.coef * term.weight(r) * fun * volume_density(m, r)

    return integrand


# -- small closed forms -----------------------------------------------------

def hyp_remainder(rho):
    """(rho cosh rho - sinh rho) / (rho^2 sinh rho), series below 0.05."""
    rho = np.asarray(rho, dtype=float)
    x2 = rho * rho
    series = 1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0)))
    with np.errstate(all="ignore"):
        direct = (rho * np.cosh(rho) - np.sinh(rho)) / (x2 * np.sinh(rho))
    return np.where(rho < 0.05, series, direct)


def _abs_log(R):
    return lambda r: np.abs(np.log(r / R))


def _sqrt_abs_log(R):
    return lambda r: np.sqrt(np.abs(np.log(r / R)))


def _d_sqrt_abs_log(R):
    def d(r):
        lg = np.log(r / R)
        return np.sign(lg) / (2.0 * r * np.sqrt(np.abs(lg)))
    return d


# -- case catalog -----------------------------------------------------------

@dataclass(frozen=True)
class IdentityCase:
    id: str
    N: int
    b: float
    b_pinned: bool
    params: Mapping[str, object]
    upper: float                    # interval is (0, upper)
    shifted: bool
    variant: str
    terms: tuple
    margins: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    singular: tuple = ()
    pair: BesselPair | None = None
    chart: str = "geodesic"         # "ball" cases also have a ball-chart oracle


@dataclass(frozen=True)
class CaseInfo:
    id: str
    summary: str
    params: Mapping[str, object]    # defaults
    b_rule: str                     # "free" or "pinned"
    ranges: str
    inequality: bool = False


CASES: dict[str, CaseInfo] = {}
_BUILDERS: dict[str, Callable] = {}


def _register(info: CaseInfo):
    def deco(fn):
        CASES[info.id] = info
        _BUILDERS[info.id] = fn
        return fn
    return deco


def _lhs_rhs(variant: str) -> str:
    return GRAD_SQ if variant == "gradient" else RADIAL_SQ


def _nu(N, lam):
    return (N - lam - 2) / 2.0


def _pair_from_params(N: int, p: Mapping) -> BesselPair:
    pid = str(p["pair"])
    pp = {"N": N}
    for k in besselpair.CATALOG_PARAMS.get(pid, ()):
        if k in p:
            pp[k] = p[k]
    try:
        return besselpair.catalog(pid, pp)
    except besselpair.PairError as exc:
        raise CaseError(str(exc)) from None


def _t1_terms(pair: BesselPair, GR: str) -> list:
    dlog = lambda r: pair.dphi(r) / pair.phi(r)  # noqa: E731
    return [
        Term("V |grad f|^2", "lhs", 1.0, pair.V, GR),
        Term("W f^2", "lhs", -1.0, pair.W, VALUE_SQ),
        Term("V phi^2 |grad(f/phi)|^2", "rhs", 1.0, lambda r: pair.V(r) * pair.phi(r) ** 2, GR,
             _over(pair.phi, pair.dphi)),
        Term("V f^2 (phi'/phi) J'/J", "rhs", -1.0, pair.V, LOGDERIV_SQ, dlogphi=dlog),
    ]


@_register(CaseInfo("T1-generic", "identity for any catalog pair on the b-model",
                    {"b": 0.5, "pair": "bv-bessel", "lambda": 0.0, "alpha": 0.5, "R": 2.0}, "free",
                    "pair parameters as in the pair catalog"))
def _b_t1(N, p, variant):
    pair = _pair_from_params(N, p)
    return dict(upper=pair.R, terms=_t1_terms(pair, _lhs_rhs(variant)), pair=pair)


@_register(CaseInfo("T2-shifted", "global identity with phi vanishing at R, applied to f - f(R)",
                    {"b": 0.5, "R": 1.0}, "free", "R > 0; profile flat at R"))
def _b_t2(N, p, variant):
    R = float(p["R"])
    if not R > 0:
        raise CaseError("R must be > 0")
    pair = BesselPair("critical-log-global", N, math.inf,
                      V=lambda r: r ** (2.0 - N),
                      W=lambda r: 1.0 / (4.0 * r ** N * np.log(r / R) ** 2),
                      phi=_sqrt_abs_log(R), dphi=_d_sqrt_abs_log(R), monotone=False,
                      params={"N": N, "R": R}, zero_at_R=True)
    return dict(upper=math.inf, terms=_t1_terms(pair, _lhs_rhs(variant)), pair=pair,
                shifted=True, singular=(R,))


@_register(CaseInfo("CT1-ineq", "comparison inequality for a nonincreasing phi",
                    {"b": 1.0, "b_cmp": None, "pair": "euclid-power", "lambda": 0.0, "alpha": 0.5, "R": 2.0},
                    "free", "0 <= b_cmp <= b; pair must have nonincreasing phi", inequality=True))
def _b_ct1(N, p, variant):
    pair = _pair_from_params(N, p)
    if not pair.monotone:
        raise CaseError(f"pair {pair.id} does not have a nonincreasing phi")
    b_cmp = float(p["b"] if p.get("b_cmp") is None else p["b_cmp"])
    if not 0.0 <= b_cmp <= float(p["b"]):
        raise CaseError("b_cmp must satisfy 0 <= b_cmp <= b")
    GR = _lhs_rhs(variant)
    terms = _t1_terms(pair, GR)
    dlog = terms[3].dlogphi
    terms.append(Term("V f^2 (phi'/phi) J_cmp'/J_cmp", "aux", -1.0, pair.V, LOGDERIV_SQ,
                      dlogphi=dlog, b_override=b_cmp))
    margins = {
        "comparison": {"@lhs": 1.0, "V phi^2 |grad(f/phi)|^2": -1.0, "V f^2 (phi'/phi) J_cmp'/J_cmp": -1.0},
        "drop-comparison-remainder": {"V f^2 (phi'/phi) J_cmp'/J_cmp": 1.0},
    }
    return dict(upper=pair.R, terms=terms, pair=pair, margins=margins, params_out={"b_cmp": b_cmp})


def _check_lambda_strict(N, lam):
    if not lam < N - 2:
        raise CaseError(f"lambda must satisfy lambda < N-2 = {N - 2}, got {lam!r}")


@_register(CaseInfo("C1", "weighted Hardy identity with power weights",
                    {"b": 0.0, "lambda": 0.0}, "free", "lambda < N-2", inequality=True))
def _b_c1(N, p, variant):
    lam = float(p["lambda"])
    _check_lambda_strict(N, lam)
    nu = _nu(N, lam)
    GR = _lhs_rhs(variant)
    terms = [
        Term("|grad f|^2 / rho^lambda", "lhs", 1.0, lambda r: r ** (-lam), GR),
        Term("nu^2 f^2 / rho^(lambda+2)", "lhs", -nu * nu, lambda r: r ** (-lam - 2.0), VALUE_SQ),
        Term("rho^(2-N) |grad(rho^nu f)|^2", "rhs", 1.0, lambda r: r ** (2.0 - N), GR, _times_pow(nu)),
        Term("curvature remainder", "rhs", -1.0, lambda r: r ** (-lam), LOGDERIV_SQ,
             dlogphi=lambda r: -nu / r),
    ]
    margins = {"hardy": {"@lhs": 1.0, "rho^(2-N) |grad(rho^nu f)|^2": -1.0}}
    return dict(upper=math.inf, terms=terms, margins=margins)


def _critlog_terms(N, R, GR, name_f="f"):
    absl = _abs_log(R)
    return [
        Term(f"|grad {name_f}|^2 / rho^(N-2)", "lhs", 1.0, lambda r: r ** (2.0 - N), GR),
        Term(f"{name_f}^2 / (4 rho^N ln^2(rho/R))", "lhs", -0.25,
             lambda r: 1.0 / (r ** N * np.log(r / R) ** 2), VALUE_SQ),
        Term(f"rho^(2-N) |ln| |grad({name_f}/sqrt|ln|)|^2", "rhs", 1.0,
             lambda r: r ** (2.0 - N) * absl(r), GR, _over(_sqrt_abs_log(R), _d_sqrt_abs_log(R))),
    ]


@_register(CaseInfo("C2", "critical logarithmic Hardy identity on the ball of radius R",
                    {"b": 0.0, "R": 1.0}, "free", "R > 0", inequality=True))
def _b_c2(N, p, variant):
    R = float(p["R"])
    if not R > 0:
        raise CaseError("R must be > 0")
    terms = _critlog_terms(N, R, _lhs_rhs(variant))
    terms.append(Term("curvature remainder", "rhs", -1.0, lambda r: r ** (2.0 - N), LOGDERIV_SQ,
                      dlogphi=lambda r: 1.0 / (2.0 * r * np.log(r / R))))
    margins = {"hardy": {"@lhs": 1.0, terms[2].name: -1.0}}
    return dict(upper=R, terms=terms, margins=margins, singular=(R,))


@_register(CaseInfo("C3-global", "critical logarithmic identity on the whole space for f - f(R)",
                    {"b": 0.0, "R": 1.0}, "pinned", "R > 0; profile flat at R; Euclidean only",
                    inequality=True))
def _b_c3(N, p, variant):
    R = float(p["R"])
    if not R > 0:
        raise CaseError("R must be > 0")
    GR = _lhs_rhs(variant)
    t = _critlog_terms(N, R, GR, name_f="F")
    # move the logarithmic Hardy term to the right-hand side
    terms = [t[0], replace(t[1], side="rhs", coef=0.25), t[2]]
    margins = {"hardy": {"@lhs": 1.0, t[1].name: -1.0}}
    return dict(upper=math.inf, terms=terms, margins=margins, shifted=True, singular=(R,))


@_register(CaseInfo("C4-stability", "stability form of the weighted Hardy inequality at one R",
                    {"b": 0.0, "lambda": 0.0, "R": 1.2}, "pinned", "lambda < N-2, R > 0; Euclidean only",
                    inequality=True))
def _b_c4(N, p, variant):
    lam = float(p["lambda"])
    _check_lambda_strict(N, lam)
    R = float(p["R"])
    if not R > 0:
        raise CaseError("R must be > 0")
    nu = _nu(N, lam)

    def K(prof):
        return R ** nu * float(prof.base(np.array([R]))[0][0])

    def u_tr(prof, r, g, dg):
        k = K(prof)
        return r ** nu * g - k, nu * r ** (nu - 1.0) * g + r ** nu * dg

    phi, dphi = _sqrt_abs_log(R), _d_sqrt_abs_log(R)

    def uphi_tr(prof, r, g, dg):
        u, du = u_tr(prof, r, g, dg)
        p_ = phi(r)
        return u / p_, (du * p_ - u * dphi(r)) / (p_ * p_)

    def log_tail(prof):
        # outside the support u = -K; int K^2 / (r ln^2(r/R)) over (0, a) and (b, inf)
        k = K(prof)
        if k == 0.0:
            return 0.0
        a, b = prof.support
        return k * k * (1.0 / abs(math.log(a / R)) + 1.0 / math.log(b / R))

    def grad_tail(prof):
        # there d_rho(u/sqrt|ln|) makes the same integrand with a factor 1/4
        return 0.25 * log_tail(prof)

    terms = [
        Term("|d_rho f|^2 / rho^lambda", "lhs", 1.0, lambda r: r ** (-lam), RADIAL_SQ),
        Term("nu^2 f^2 / rho^(lambda+2)", "lhs", -nu * nu, lambda r: r ** (-lam - 2.0), VALUE_SQ),
        Term("u^2 / (4 rho^N ln^2(rho/R))", "rhs", 0.25, lambda r: 1.0 / (r ** N * np.log(r / R) ** 2),
             VALUE_SQ, u_tr, tail=log_tail),
        Term("rho^(2-N) |ln| |d_rho(u/sqrt|ln|)|^2", "rhs", 1.0, lambda r: r ** (2.0 - N) * np.abs(np.log(r / R)),
             RADIAL_SQ, uphi_tr, tail=grad_tail),
    ]
    margins = {"stability": {"@lhs": 1.0, "u^2 / (4 rho^N ln^2(rho/R))": -1.0}}
    if variant == "gradient":
        terms.append(Term("|grad f|^2 / rho^lambda", "aux", 1.0, lambda r: r ** (-lam), GRAD_SQ))
        margins["stability-gradient"] = {"|grad f|^2 / rho^lambda": 1.0, "nu^2 f^2 / rho^(lambda+2)": 1.0,
                                         "u^2 / (4 rho^N ln^2(rho/R))": -1.0}
    return dict(upper=math.inf, terms=terms, margins=margins, singular=(R,))


@_register(CaseInfo("BV-ball", "Hardy inequality with the Bessel-zero improvement on a ball",
                    {"b": 0.0, "lambda": 0.0, "R": 1.0}, "free", "lambda <= N-2, R > 0", inequality=True))
def _b_bv(N, p, variant):
    lam = float(p["lambda"])
    if not lam <= N - 2:
        raise CaseError(f"lambda must satisfy lambda <= N-2 = {N - 2}")
    R = float(p["R"])
    if not R > 0:
        raise CaseError("R must be > 0")
    nu = _nu(N, lam)
    k = specfun.bessel_first_zero(0.0) / R
    GR = _lhs_rhs(variant)
    j0 = lambda r: specfun.bessel_j_array(0.0, k * r)  # noqa: E731
    dj0 = lambda r: -k * specfun.bessel_j_array(1.0, k * r)  # noqa: E731

    def h_tr(prof, r, g, dg):
        j, dj = j0(r), dj0(r)
        rn = r ** nu
        h = rn * g / j
        dh = (nu * r ** (nu - 1.0) * g + rn * dg) / j - rn * g * dj / (j * j)
        return h, dh

    terms = [
        Term("|grad f|^2 / rho^lambda", "lhs", 1.0, lambda r: r ** (-lam), GR),
        Term("nu^2 f^2 / rho^(lambda+2)", "lhs", -nu * nu, lambda r: r ** (-lam - 2.0), VALUE_SQ),
        Term("z0^2/R^2 f^2 / rho^lambda", "rhs", k * k, lambda r: r ** (-lam), VALUE_SQ),
        Term("rho^(2-N) J0^2 |grad(rho^nu f / J0)|^2", "rhs", 1.0, lambda r: r ** (2.0 - N) * j0(r) ** 2, GR, h_tr),
        Term("curvature remainder", "rhs", -1.0, lambda r: r ** (-lam), LOGDERIV_SQ,
             dlogphi=lambda r: -nu / r + dj0(r) / j0(r)),
    ]
    margins = {
        "bessel-improved": {"@lhs": 1.0, "z0^2/R^2 f^2 / rho^lambda": -1.0,
                            "rho^(2-N) J0^2 |grad(rho^nu f / J0)|^2": -1.0},
        "bessel-only": {"@lhs": 1.0, "z0^2/R^2 f^2 / rho^lambda": -1.0},
    }
    return dict(upper=R, terms=terms, margins=margins)


# ball-chart helpers: x = tanh(rho/2) is the Euclidean radius in the Poincare ball

def _x_of(rho):
    return np.tanh(0.5 * rho)


def _dx_drho(x):
    return 0.5 * (1.0 - x * x)


@_register(CaseInfo("T6-ballmodel", "identity transplanted from a Euclidean pair on the unit ball",
                    {"b": 1.0, "lambda": 0.0}, "pinned", "lambda <= N-2; hyperbolic only"))
def _b_t6(N, p, variant):
    lam = float(p["lambda"])
    if not lam <= N - 2:
        raise CaseError(f"lambda must satisfy lambda <= N-2 = {N - 2}")
    nu = _nu(N, lam)

    def VH(x):
        return (1.0 - x * x) ** (N - 2) * x ** (-lam)

    def WH(x):
        return 0.25 * nu * nu * (1.0 - x * x) ** N * x ** (-lam - 2.0)

    def h_tr(prof, rho, g, dg):
        x = _x_of(rho)
        ph = x ** (-nu)
        dph = -nu * x ** (-nu - 1.0) * _dx_drho(x)
        return g / ph, (dg * ph - g * dph) / (ph * ph)

    GR = _lhs_rhs(variant)
    terms = [
        Term("V |grad_H f|^2", "lhs", 1.0, lambda rho: VH(_x_of(rho)), GR),
        Term("W f^2", "lhs", -1.0, lambda rho: WH(_x_of(rho)), VALUE_SQ),
        Term("V phi^2 |grad_H(f/phi)|^2", "rhs", 1.0, lambda rho: VH(_x_of(rho)) * _x_of(rho) ** (-2.0 * nu),
             GR, h_tr),
    ]
    return dict(upper=math.inf, terms=terms, chart="ball",
                ball=dict(VH=VH, WH=WH, phi=lambda x: x ** (-nu), dphi=lambda x: -nu * x ** (-nu - 1.0)))


@_register(CaseInfo("V2-hyperbolic", "identity built on the fundamental solution of the hyperbolic Laplacian",
                    {"b": 1.0}, "pinned", "hyperbolic only"))
def _b_v2(N, p, variant):
    cache = besselpair.g_cache(N)
    c = ((N - 2) / 2.0) ** 2

    def v2_oracle(rho):
        # independent path: G by per-point Gauss-Legendre, not the cache
        x = _x_of(rho)
        G = besselpair.g_oracle(N, x.reshape(-1)).reshape(x.shape)
        return besselpair.v2_weight(N, x, G=G)

    def h_tr(prof, rho, g, dg):
        x = _x_of(rho)
        sg = np.sqrt(cache.G(x))
        dsg = -besselpair._F(N, x) / (2.0 * sg) * _dx_drho(x)
        return g / sg, (dg * sg - g * dsg) / (sg * sg)

    GR = _lhs_rhs(variant)
    terms = [
        Term("|grad_H f|^2", "lhs", 1.0, lambda rho: np.ones_like(rho), GR),
        Term("((N-2)/2)^2 V2 f^2", "lhs", -c, v2_oracle, VALUE_SQ),
        Term("G |grad_H(f/sqrt G)|^2", "rhs", 1.0, lambda rho: cache.G(_x_of(rho)), GR, h_tr),
    ]
    return dict(upper=math.inf, terms=terms, chart="ball")


def _h1_terms(pair: BesselPair, N: int, GR: str) -> list:
    return [
        Term("V |grad f|^2", "lhs", 1.0, pair.V, GR),
        Term("W f^2", "lhs", -1.0, pair.W, VALUE_SQ),
        Term("V phi^2 |grad(f/phi)|^2", "rhs", 1.0, lambda r: pair.V(r) * pair.phi(r) ** 2, GR,
             _over(pair.phi, pair.dphi)),
        Term("(N-1) V (phi'/phi) (rho cosh - sinh)/(rho sinh) f^2", "rhs", -(N - 1.0),
             lambda r: pair.V(r) * pair.dphi(r) / pair.phi(r) * r * hyp_remainder(r), VALUE_SQ),
    ]


@_register(CaseInfo("H1-generic", "hyperbolic form of the identity with the explicit density term",
                    {"b": 1.0, "pair": "bv-bessel-alpha", "lambda": 0.0, "alpha": 0.5, "R": 2.0}, "pinned",
                    "pair parameters as in the pair catalog"))
def _b_h1(N, p, variant):
    pair = _pair_from_params(N, p)
    return dict(upper=pair.R, terms=_h1_terms(pair, N, _lhs_rhs(variant)), pair=pair)


@_register(CaseInfo("T3.1", "hyperbolic Hardy identity with the sharp constant ((N-2)/2)^2",
                    {"b": 1.0}, "pinned", "hyperbolic only"))
def _b_t31(N, p, variant):
    nu = (N - 2) / 2.0
    GR = _lhs_rhs(variant)
    terms = [
        Term("|grad f|^2", "lhs", 1.0, lambda r: np.ones_like(r), GR),
        Term("((N-2)/2)^2 f^2 / rho^2", "lhs", -nu * nu, lambda r: r ** -2.0, VALUE_SQ),
        Term("rho^(2-N) |grad(rho^((N-2)/2) f)|^2", "rhs", 1.0, lambda r: r ** (2.0 - N), GR, _times_pow(nu)),
        Term("(N-2)(N-1)/2 (rho cosh - sinh)/(rho^2 sinh) f^2", "rhs", (N - 2) * (N - 1) / 2.0,
             hyp_remainder, VALUE_SQ),
    ]
    return dict(upper=math.inf, terms=terms)


@_register(CaseInfo("T3.2", "Poincare-Hardy identity with constant ((N-1)/2)^2 plus two lower-order terms",
                    {"b": 1.0}, "pinned", "hyperbolic only"))
def _b_t32(N, p, variant):
    GR = _lhs_rhs(variant)
    half = (N - 1) / 2.0

    def h_tr(prof, r, g, dg):
        s = np.sinh(r) ** half / np.sqrt(r)
        ds = s * (half / np.tanh(r) - 0.5 / r)
        return s * g, ds * g + s * dg

    terms = [
        Term("|grad f|^2", "lhs", 1.0, lambda r: np.ones_like(r), GR),
        Term("(N-1)^2/4 f^2", "lhs", -half * half, lambda r: np.ones_like(r), VALUE_SQ),
        Term("f^2 / (4 rho^2)", "lhs", -0.25, lambda r: r ** -2.0, VALUE_SQ),
    ]
    if N != 3:
        terms.append(Term("(N-1)(N-3)/4 f^2 / sinh^2", "lhs", -(N - 1) * (N - 3) / 4.0,
                          lambda r: np.sinh(r) ** -2.0, VALUE_SQ))
    terms.append(Term("rho / sinh^(N-1) |grad(sinh^((N-1)/2) f / rho^(1/2))|^2", "rhs", 1.0,
                      lambda r: r / np.sinh(r) ** (N - 1), GR, h_tr))
    return dict(upper=math.inf, terms=terms)


@_register(CaseInfo("T3.3", "Hardy identity on a geodesic ball with the Bessel-zero constant z_alpha^2/R^2",
                    {"b": 1.0, "alpha": 0.5, "lambda": 0.0, "R": 2.0}, "pinned",
                    "0 <= alpha <= (N-lambda-2)/2, R > 0", inequality=True))
def _b_t33(N, p, variant):
    lam = float(p["lambda"])
    alpha = float(p["alpha"])
    R = float(p["R"])
    nu = _nu(N, lam)
    if not (0.0 <= alpha <= nu + 1e-15):
        raise CaseError(f"alpha must satisfy 0 <= alpha <= (N-lambda-2)/2 = {nu}, got {alpha!r}")
    if not R > 0:
        raise CaseError("R must be > 0")
    z = specfun.bessel_first_zero(alpha)
    k = z / R
    ja = lambda r: specfun.bessel_j_array(alpha, k * r)  # noqa: E731
    dja = lambda r: k * specfun.bessel_j_deriv_array(alpha, k * r)  # noqa: E731

    def h_tr(prof, r, g, dg):
        j, dj = ja(r), dja(r)
        rn = r ** nu
        return rn * g / j, (nu * r ** (nu - 1.0) * g + rn * dg) / j - rn * g * dj / (j * j)

    GR = _lhs_rhs(variant)
    rem = "(N-1) (-nu/rho + k J'/J) (rho cosh - sinh)/(rho sinh) f^2"
    terms = [
        Term("|grad f|^2 / rho^lambda", "lhs", 1.0, lambda r: r ** (-lam), GR),
        Term("(nu^2 - alpha^2) f^2 / rho^(lambda+2)", "lhs", -(nu * nu - alpha * alpha),
             lambda r: r ** (-lam - 2.0), VALUE_SQ),
        Term("z_alpha^2/R^2 f^2 / rho^lambda", "rhs", k * k, lambda r: r ** (-lam), VALUE_SQ),
        Term("rho^(2-N) J_alpha^2 |grad(f/phi)|^2", "rhs", 1.0, lambda r: r ** (2.0 - N) * ja(r) ** 2, GR, h_tr),
        Term(rem, "rhs", -(N - 1.0), lambda r: r ** (-lam) * (-nu / r + dja(r) / ja(r)) * r * hyp_remainder(r),
             VALUE_SQ),
    ]
    margins = {
        "drop-ground-state": {"@lhs": 1.0, "z_alpha^2/R^2 f^2 / rho^lambda": -1.0, rem: -1.0},
        "drop-bessel-remainder": {rem: 1.0},
    }
    return dict(upper=R, terms=terms, margins=margins, params_out={"z_alpha": z})


@_register(CaseInfo("H-lambda", "weighted hyperbolic Hardy identity with power weights",
                    {"b": 1.0, "lambda": 0.0}, "pinned", "lambda < N-2"))
def _b_hl(N, p, variant):
    lam = float(p["lambda"])
    _check_lambda_strict(N, lam)
    nu = _nu(N, lam)
    GR = _lhs_rhs(variant)
    terms = [
        Term("|grad f|^2 / rho^lambda", "lhs", 1.0, lambda r: r ** (-lam), GR),
        Term("nu^2 f^2 / rho^(lambda+2)", "lhs", -nu * nu, lambda r: r ** (-lam - 2.0), VALUE_SQ),
        Term("rho^(2-N) |grad(rho^nu f)|^2", "rhs", 1.0, lambda r: r ** (2.0 - N), GR, _times_pow(nu)),
        Term("nu (N-1) (rho cosh - sinh)/(rho^(lambda+2) sinh) f^2", "rhs", nu * (N - 1.0),
             lambda r: r ** (-lam) * hyp_remainder(r), VALUE_SQ),
    ]
    return dict(upper=math.inf, terms=terms)


@_register(CaseInfo("H-critlog", "critical logarithmic identity on a hyperbolic geodesic ball",
                    {"b": 1.0, "R": 3.0}, "pinned", "R > 0"))
def _b_hcl(N, p, variant):
    R = float(p["R"])
    if not R > 0:
        raise CaseError("R must be > 0")
    terms = _critlog_terms(N, R, _lhs_rhs(variant))
    absl = _abs_log(R)
    terms.append(Term("(N-1) rho^(2-N) / (2|ln|) (rho cosh - sinh)/(rho^2 sinh) f^2", "rhs", N - 1.0,
                      lambda r: r ** (2.0 - N) / (2.0 * absl(r)) * hyp_remainder(r), VALUE_SQ))
    return dict(upper=R, terms=terms, singular=(R,))


@_register(CaseInfo("H-bessel-R", "hyperbolic identity with weight rho^(2-N) and the J0 zero at R",
                    {"b": 1.0, "R": 2.0}, "pinned", "R > 0"))
def _b_hbr(N, p, variant):
    R = float(p["R"])
    if not R > 0:
        raise CaseError("R must be > 0")
    k = specfun.bessel_first_zero(0.0) / R
    j0 = lambda r: specfun.bessel_j_array(0.0, k * r)  # noqa: E731
    j1 = lambda r: specfun.bessel_j_array(1.0, k * r)  # noqa: E731
    GR = _lhs_rhs(variant)

    def h_tr(prof, r, g, dg):
        j = j0(r)
        return g / j, dg / j - g * (-k * j1(r)) / (j * j)

    terms = [
        Term("|grad f|^2 / rho^(N-2)", "lhs", 1.0, lambda r: r ** (2.0 - N), GR),
        Term("z0^2/R^2 f^2 / rho^(N-2)", "lhs", -k * k, lambda r: r ** (2.0 - N), VALUE_SQ),
        Term("J0^2 / rho^(N-2) |grad(f/J0)|^2", "rhs", 1.0, lambda r: j0(r) ** 2 * r ** (2.0 - N), GR, h_tr),
        Term("(N-1) z0/R (J0'/J0) (rho cosh - sinh)/(rho^(N-1) sinh) f^2", "rhs", -(N - 1.0) * k,
             lambda r: (-j1(r) / j0(r)) * r ** (3.0 - N) * hyp_remainder(r), VALUE_SQ),
    ]
    return dict(upper=R, terms=terms)


CASE_IDS = tuple(CASES)


def build_case(case_id: str, params: Mapping[str, object] | None = None) -> IdentityCase:
    """Wire a named case.  params must contain N; missing entries take the defaults in CASES."""
    if case_id not in CASES:
        raise CaseError(f"unknown case id {case_id!r}; known: {', '.join(CASE_IDS)}")
    info = CASES[case_id]
    params = dict(params or {})
    if "N" not in params:
        raise CaseError("parameter N is required")
    N = params.pop("N")
    if int(N) != N or N < 3:
        raise CaseError(f"N must be an integer >= 3, got {N!r}")
    N = int(N)
    variant = str(params.pop("variant", "gradient"))
    if variant not in ("gradient", "radial"):
        raise CaseError(f"variant must be 'gradient' or 'radial', got {variant!r}")
    unknown = set(params) - set(info.params)
    if unknown:
        raise CaseError(f"case {case_id} does not take parameter(s) {sorted(unknown)}")
    p = dict(info.params)
    p.update({k: v for k, v in params.items() if v is not None})
    b = float(p["b"])
    if info.b_rule == "pinned" and b != float(info.params["b"]):
        raise CaseError(f"case {case_id} requires b = {info.params['b']}")
    if not (math.isfinite(b) and b >= 0.0):
        raise CaseError("b must be finite and >= 0")
    for k, v in p.items():
        if k not in ("pair", "b_cmp") and not isinstance(v, str):
            p[k] = float(v)
    built = _BUILDERS[case_id](N, p, variant)
    p.update(built.pop("params_out", {}))
    ball = built.pop("ball", None)
    p = {k: v for k, v in p.items() if v is not None}
    case = IdentityCase(
        id=case_id, N=N, b=b, b_pinned=info.b_rule == "pinned", params=p, variant=variant,
        upper=float(built.pop("upper")), shifted=built.pop("shifted", False),
        terms=tuple(built.pop("terms")), margins=built.pop("margins", {}),
        singular=tuple(built.pop("singular", ())), pair=built.pop("pair", None),
        chart=built.pop("chart", "geodesic"),
    )
    if ball is not None:
        _BALL[id(case)] = (case, ball)
    return case


_BALL: dict[int, tuple] = {}


def default_profiles(case: IdentityCase, ell: int = 0) -> list[TestProfile]:
    """Three distinct profiles that satisfy the case's support rules."""
    if case.shifted:
        R = float(case.params["R"])
        return [
            TestProfile("bump", R, 0.6 * R, ell, flat_at=R, value_at_R=0.7),
            TestProfile("poly-bump", 1.1 * R, 0.5 * R, ell, flat_at=R, value_at_R=-0.4),
            TestProfile("skew-bump", 0.9 * R, 0.7 * R, ell, flat_at=R, value_at_R=1.0),
        ]
    U = case.upper
    if math.isfinite(U):
        return [
            TestProfile("bump", 0.5 * U, 0.35 * U, ell),
            TestProfile("poly-bump", 0.55 * U, 0.3 * U, ell),
            TestProfile("skew-bump", 0.45 * U, 0.4 * U, ell),
        ]
    return [
        TestProfile("bump", 1.5, 1.0, ell),
        TestProfile("poly-bump", 1.2, 0.8, ell),
        TestProfile("skew-bump", 2.0, 1.2, ell),
    ]


# -- verification -----------------------------------------------------------

@dataclass(frozen=True)
class TermValue:
    name: str
    side: str
    value: float
    err_est: float


@dataclass(frozen=True)
class VerificationReport:
    case: str
    N: int
    b: float
    params: Mapping[str, object]
    profile: Mapping[str, object]
    variant: str
    tol: float
    terms: tuple
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    margins: Mapping[str, float]
    passed: bool
    extra: Mapping[str, object] = field(default_factory=dict)

    def term(self, name: str) -> TermValue:
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = {
            "meta": {"case": self.case, "N": self.N, "b": self.b, "params": dict(self.params),
                     "profile": dict(self.profile), "tol": self.tol, "variant": self.variant},
            "terms": [{"name": t.name, "side": t.side, "value": t.value, "err_est": t.err_est}
                      for t in self.terms],
            "lhs": self.lhs,
            "rhs": self.rhs,
            "abs_residual": self.abs_residual,
            "rel_residual": self.rel_residual,
            "pass": self.passed,
        }
        if self.margins:
            d["margins"] = dict(self.margins)
        if self.extra:
            d["extra"] = dict(self.extra)
        return d


def check_profile(case: IdentityCase, f: TestProfile) -> tuple[float, float]:
    a, b = f.support
    if case.shifted:
        R = float(case.params["R"])
        if f.flat_at != R:
            raise CaseError(f"case {case.id} needs a profile flat at R = {R}")
        if not a < R < b:
            raise CaseError(f"profile support [{a}, {b}] must contain R = {R}")
        return a, b
    if f.flat_at is not None:
        raise CaseError(f"case {case.id} does not take a flat-at-R profile")
    if not b < case.upper:
        raise CaseError(f"profile support [{a}, {b}] must lie inside (0, {case.upper})")
    return a, b


def _integrate_terms(terms, m, f, lo, hi, singular, quad):
    sing = tuple(s for s in singular if lo <= s <= hi)
    spec = QuadratureSpec(quad.abs_tol, quad.rel_tol, quad.max_subdivisions, sing)
    out = []
    for t in terms:
        try:
            val, err = integrate(reduce(f, m, t), lo, hi, spec)
        except (QuadratureError, NonFiniteSampleError, FloatingPointError, ZeroDivisionError) as exc:
            raise TermQuadratureError(t.name, exc) from exc
        if t.tail is not None:
            val += t.coef * t.tail(f)
        out.append(TermValue(t.name, t.side, float(val), float(err)))
    return out


def _assemble(case, m, f, tol, values, extra=None) -> VerificationReport:
    lhs = math.fsum(t.value for t in values if t.side == "lhs")
    rhs = math.fsum(t.value for t in values if t.side == "rhs")
    scale = max((abs(t.value) for t in values if t.side != "aux"), default=0.0)
    absres = abs(lhs - rhs)
    rel = absres / scale if scale > 0 else 0.0
    by_name = {t.name: t.value for t in values}
    margins = {}
    mscale = max((abs(t.value) for t in values), default=0.0)
    ok = rel <= tol
    for name, combo in case.margins.items():
        v = 0.0
        for key, c in combo.items():
            v += c * (lhs if key == "@lhs" else by_name[key])
        margins[name] = v
        if v < -tol * mscale:
            ok = False
    return VerificationReport(
        case=case.id, N=case.N, b=m.b, params=dict(case.params), profile=f.to_dict(), variant=case.variant,
        tol=tol, terms=tuple(values), lhs=lhs, rhs=rhs, abs_residual=absres, rel_residual=rel,
        margins=margins, passed=bool(ok), extra=extra or {},
    )


def verify(case: IdentityCase, m: ModelManifold | None = None, f: TestProfile | None = None,
           tol: float = DEFAULT_TOL, quad: QuadratureSpec = TERM_QUAD) -> VerificationReport:
    """Integrate every term of the case for profile f and compare the two sides."""
    if m is None:
        m = ModelManifold(case.N, case.b)
    if m.N != case.N:
        raise CaseError(f"manifold dimension {m.N} does not match case dimension {case.N}")
    if case.b_pinned and m.b != case.b:
        raise CaseError(f"case {case.id} requires b = {case.b}, got {m.b}")
    for t in case.terms:
        if t.b_override is not None and t.b_override > m.b:
            raise CaseError("comparison curvature must not exceed the manifold curvature")
    if f is None:
        f = default_profiles(case)[0]
    lo, hi = check_profile(case, f)
    values = _integrate_terms(case.terms, m, f, lo, hi, case.singular, quad)
    return _assemble(case, m, f, tol, values)


# -- Poincare-ball chart oracle ----------------------------------------------

def _ball_measure(N, x, grad: bool):
    """Radial factor of dV_H (or of |grad_H u|^2 dV_H over |grad u|^2) in the ball chart."""
    if grad:
        return 2.0 ** (N - 2) * x ** (N - 1) / (1.0 - x * x) ** (N - 2)
    return 2.0 ** N * x ** (N - 1) / (1.0 - x * x) ** N


def _ball_integrand(N, L, f: TestProfile, weight, kind, phi=None, dphi=None):
    """Integrand in the Euclidean radius x of the ball, for u(x) = g(rho(x))."""

    def fn(x):
        x = np.asarray(x, dtype=float)
        rho = ball_to_geodesic(x)
        g, dg = f.radial(rho)
        u, du = g, dg * 2.0 / (1.0 - x * x)
        if phi is not None:
            p, dp = phi(x), dphi(x)
            u, du = u / p, (du * p - u * dp) / (p * p)
        if kind == GRAD_SQ:
            val = du * du + L * u * u / (x * x)
        elif kind == RADIAL_SQ:
            val = du * du
        else:
            val = u * u
        return weight(x) * val * _ball_measure(N, x, kind != VALUE_SQ)

    return fn


def ball_chart_terms(case: IdentityCase, f: TestProfile) -> list[tuple]:
    """(name, side, coef, integrand) for each term of a ball-model case, plus
    the two plain energies int |f|^2 and int |grad f|^2."""
    N = case.N
    L = angular_eigenvalue(N, f.ell)
    GR = _lhs_rhs(case.variant)
    one = lambda x: np.ones_like(x)  # noqa: E731
    out = [
        ("int |f|^2 dV", "aux", 1.0, _ball_integrand(N, L, f, one, VALUE_SQ)),
        ("int |grad f|^2 dV", "aux", 1.0, _ball_integrand(N, L, f, one, GRAD_SQ)),
    ]
    if case.id == "T6-ballmodel":
        _, ball = _BALL[id(case)]
        out += [
            ("V |grad_H f|^2", "lhs", 1.0, _ball_integrand(N, L, f, ball["VH"], GR)),
            ("W f^2", "lhs", -1.0, _ball_integrand(N, L, f, ball["WH"], VALUE_SQ)),
            ("V phi^2 |grad_H(f/phi)|^2", "rhs", 1.0,
             _ball_integrand(N, L, f, lambda x: ball["VH"](x) * ball["phi"](x) ** 2, GR, ball["phi"], ball["dphi"])),
        ]
    elif case.id == "V2-hyperbolic":
        G = lambda x: besselpair.g_oracle(N, x.reshape(-1)).reshape(x.shape)  # noqa: E731
        sG = lambda x: np.sqrt(G(x))  # noqa: E731
        dsG = lambda x: -besselpair._F(N, x) / (2.0 * sG(x))  # noqa: E731
        out += [
            ("|grad_H f|^2", "lhs", 1.0, _ball_integrand(N, L, f, one, GR)),
            ("((N-2)/2)^2 V2 f^2", "lhs", -((N - 2) / 2.0) ** 2,
             _ball_integrand(N, L, f, lambda x: besselpair.v2_weight(N, x, G=G(x)), VALUE_SQ)),
            ("G |grad_H(f/sqrt G)|^2", "rhs", 1.0, _ball_integrand(N, L, f, G, GR, sG, dsG)),
        ]
    else:
        raise CaseError(f"case {case.id} has no ball-chart form")
    return out


def verify_ballmodel_oracle(case: IdentityCase, f: TestProfile | None = None, tol: float = DEFAULT_TOL,
                            chart_tol: float = 1e-9, quad: QuadratureSpec = TERM_QUAD) -> VerificationReport:
    """Evaluate a ball-model case in the Poincare-ball chart and compare each
    term with its geodesic-chart value."""
    if case.chart != "ball":
        raise CaseError(f"case {case.id} has no ball-chart form")
    m = ModelManifold(case.N, 1.0)
    if f is None:
        f = default_profiles(case)[0]
    lo, hi = check_profile(case, f)
    geo = verify(case, m, f, tol, quad)
    geo_vals = {t.name: t.value for t in geo.terms}
    L = angular_eigenvalue(case.N, f.ell)
    geo_plain = {
        "int |f|^2 dV": _integrate_terms([Term("int |f|^2 dV", "aux", 1.0, lambda r: np.ones_like(r), VALUE_SQ)],
                                         m, f, lo, hi, (), quad)[0].value,
        "int |grad f|^2 dV": _integrate_terms([Term("int |grad f|^2 dV", "aux", 1.0, lambda r: np.ones_like(r),
                                                    GRAD_SQ)], m, f, lo, hi, (), quad)[0].value,
    }
    geo_vals.update(geo_plain)
    xlo, xhi = float(np.tanh(0.5 * lo)), float(np.tanh(0.5 * hi))
    spec = QuadratureSpec(quad.abs_tol, quad.rel_tol, quad.max_subdivisions)
    values = []
    agreement = {}
    for name, side, coef, fn in ball_chart_terms(case, f):
        try:
            val, err = integrate(fn, xlo, xhi, spec)
        except (QuadratureError, NonFiniteSampleError) as exc:
            raise TermQuadratureError(name, exc) from exc
        val *= coef
        values.append(TermValue(name, side, float(val), float(err)))
        ref = geo_vals[name]
        agreement[name] = abs(val - ref) / max(abs(ref), 1e-300)
    worst = max(agreement.values())
    rep = _assemble(case, m, f, tol, values,
                    extra={"chart": "ball", "chart_rel_diff": agreement, "chart_rel_diff_max": worst,
                           "chart_tol": chart_tol, "L": L})
    if worst > chart_tol:
        rep = replace(rep, passed=False)
    return rep
