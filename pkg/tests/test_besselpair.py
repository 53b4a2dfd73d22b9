import math

import mpmath as mp
import numpy as np
import pytest

from hardyforge import besselpair as bp
from hardyforge import exprlang as el
from hardyforge import specfun


def _G_mpmath(N, r):
    return float(mp.quad(lambda t: (1 - t * t) ** (N - 2) / t ** (N - 1), [r, 1]))


@pytest.mark.parametrize("N", [3, 4, 5, 8])
@pytest.mark.parametrize("r", [1e-3, 0.1, 0.5, 0.9, 0.999])
def test_G_cache_and_oracle_against_mpmath(N, r):
    ref = _G_mpmath(N, r)
    assert float(bp.g_cache(N).G(np.array([r]))[0]) == pytest.approx(ref, rel=1e-12)
    assert float(bp.g_oracle(N, r)[0]) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("N", [3, 5])
def test_G_cache_end_values(N):
    c = bp.g_cache(N)
    assert c.q(np.array([0.0]))[0] == pytest.approx(1.0 / (N - 2))
    assert c.q(np.array([1.0]))[0] == pytest.approx(1.0 / (2 * (N - 1)))


def test_csch2_series_switch():
    x = np.array([0.0999999, 0.1])
    v = bp.csch2_minus_inv2(x)
    assert abs(v[0] - v[1]) < 1e-7


@pytest.mark.parametrize("pid", bp.CATALOG_IDS)
def test_catalog_pairs_solve_the_ode(pid):
    N = 5
    p = bp.catalog(pid, {"N": N, "lambda": 1.0, "alpha": 0.5, "R": 2.0})
    R = p.R if math.isfinite(p.R) else 10.0
    for r in np.geomspace(0.01 * R, 0.9 * R, 20):
        assert abs(bp.ode_residual(p, r)) <= 1e-6 * bp.residual_scale(p, r)


def test_catalog_phi_positive_and_zero_flags():
    p = bp.catalog("bv-bessel", {"N": 4, "R": 1.5})
    r = np.linspace(0.01, 1.49, 50)
    assert np.all(p.phi(r) > 0)
    assert p.zero_at_R
    assert abs(float(p.phi(np.array([1.5]))[0])) < 1e-15


def test_euclid_power_closed_form():
    p = bp.catalog("euclid-power", {"N": 6, "lambda": 1.0})
    assert float(p.W(np.array([2.0]))[0]) == pytest.approx((1.5 ** 2) * 2.0 ** -3)
    assert p.monotone and math.isinf(p.R)


@pytest.mark.parametrize("pid,params", [
    ("nope", {"N": 3}),
    ("euclid-power", {"N": 4, "lambda": 2.5}),
    ("bv-bessel-alpha", {"N": 3, "alpha": 1.0}),
    ("critical-log", {"N": 3, "R": -1.0}),
    ("euclid-power", {"lambda": 0.0}),
    ("euclid-power", {"N": 2}),
])
def test_catalog_rejects_bad_parameters(pid, params):
    with pytest.raises(bp.PairError):
        bp.catalog(pid, params)


def test_shooting_accepts_euler_pair():
    v = bp.check_pair(el.parse("1"), el.parse("((N-2)/2)^2 / r^2"), 1.0, 4)
    assert v.is_pair and v.first_zero is None
    assert v.eps == pytest.approx(1e-6)
    assert v.samples[0][1] == 1.0


def test_shooting_rejects_scaled_euler_weight():
    v = bp.check_pair(el.parse("1"), el.parse("1.5*((N-2)/2)^2 / r^2"), 1.0, 4)
    assert not v.is_pair
    assert 0 < v.first_zero < 1e-3


@pytest.mark.parametrize("R,expect", [(0.99, True), (1.01, False)])
def test_shooting_finds_bessel_zero(R, expect):
    z = specfun.bessel_first_zero(0.0)
    W = el.parse(f"{z!r}^2 * r^(2-N)")
    v = bp.check_pair(el.parse("r^(2-N)"), W, R, 3)
    assert v.is_pair is expect
    if not expect:
        assert v.first_zero == pytest.approx(1.0, rel=1e-4)


def test_shooting_validates_inputs():
    with pytest.raises(ValueError):
        bp.check_pair(el.parse("1"), el.parse("1"), 1.0, 4, eps=2.0)
    with pytest.raises(el.DomainError):
        bp.check_pair(el.parse("0 - 1"), el.parse("1"), 1.0, 4)


def test_verdict_dict_shape():
    d = bp.check_pair(el.parse("1"), el.parse("1 / r^2"), 1.0, 3).to_dict()
    assert set(d) >= {"is_pair", "first_zero", "eps", "R", "N", "steps", "flags"}
