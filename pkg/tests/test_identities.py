import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardyforge import identities as idn
from hardyforge.geometry import ModelManifold
from hardyforge.quadrature import trapezoid_oracle


def test_catalog_has_seventeen_cases():
    assert len(idn.CASE_IDS) == 17


@pytest.mark.parametrize("cid", idn.CASE_IDS)
def test_every_case_closes_for_N4(cid):
    case = idn.build_case(cid, {"N": 4})
    for prof in idn.default_profiles(case, ell=1):
        rep = idn.verify(case, f=prof)
        assert rep.rel_residual <= 1e-10, (cid, prof)
        assert rep.passed


@pytest.mark.parametrize("cid", idn.CASE_IDS)
def test_radial_matches_gradient_at_ell_zero(cid):
    g = idn.build_case(cid, {"N": 5})
    r = idn.build_case(cid, {"N": 5, "variant": "radial"})
    f = idn.default_profiles(g)[1]
    vg = [t.value for t in idn.verify(g, f=f).terms if t.side != "aux"]
    vr = [t.value for t in idn.verify(r, f=f).terms if t.side != "aux"]
    assert np.allclose(vg, vr, rtol=1e-13, atol=1e-15)


profiles = st.builds(
    lambda kind, c, w_frac, ell: idn.TestProfile(kind, c, w_frac * c, ell),
    st.sampled_from(idn.PROFILE_KINDS), st.floats(0.3, 2.5), st.floats(0.1, 0.9), st.integers(0, 3),
)


@settings(max_examples=25, deadline=None)
@given(f=profiles, N=st.sampled_from([3, 4, 6, 8]), cid=st.sampled_from(["T3.1", "H-lambda", "C1", "T3.2", "T6-ballmodel"]))
def test_identity_holds_for_random_profiles(f, N, cid):
    case = idn.build_case(cid, {"N": N})
    assert idn.verify(case, f=f).rel_residual <= 1e-8


@settings(max_examples=20, deadline=None)
@given(f=profiles, b=st.floats(0.0, 3.0), lam=st.floats(-1.0, 0.9))
def test_c1_identity_any_curvature(f, b, lam):
    case = idn.build_case("C1", {"N": 3, "b": b, "lambda": lam})
    rep = idn.verify(case, f=f)
    assert rep.rel_residual <= 1e-8
    assert rep.margins["hardy"] >= -1e-8 * max(abs(t.value) for t in rep.terms)


@settings(max_examples=20, deadline=None)
@given(f=profiles, N=st.sampled_from([3, 5]))
def test_hyperbolic_remainders_are_nonnegative(f, N):
    for cid, name in [("T3.1", "(N-2)(N-1)/2 (rho cosh - sinh)/(rho^2 sinh) f^2"),
                      ("H-lambda", "nu (N-1) (rho cosh - sinh)/(rho^(lambda+2) sinh) f^2")]:
        rep = idn.verify(idn.build_case(cid, {"N": N}), f=f)
        assert rep.term(name).value >= 0.0


@settings(max_examples=15, deadline=None)
@given(f=profiles, b=st.floats(0.1, 2.0), frac=st.floats(0.0, 1.0))
def test_comparison_margins(f, b, frac):
    case = idn.build_case("CT1-ineq", {"N": 4, "b": b, "b_cmp": frac * b})
    rep = idn.verify(case, f=f)
    assert rep.passed
    assert rep.margins["drop-comparison-remainder"] >= 0.0


@pytest.mark.parametrize("scale", [2.0, -0.5])
def test_terms_are_quadratic_in_f(scale):
    case = idn.build_case("T3.3", {"N": 5})
    f = idn.default_profiles(case)[0]
    g = idn.TestProfile(f.kind, f.c, f.w, f.ell, amp=scale)
    a = [t.value for t in idn.verify(case, f=f).terms]
    b = [t.value for t in idn.verify(case, f=g).terms]
    assert np.allclose(b, np.array(a) * scale ** 2, rtol=1e-13)


@pytest.mark.parametrize("cid", ["T1-generic", "T2-shifted", "CT1-ineq", "C1", "C2", "BV-ball"])
def test_small_curvature_tends_to_euclidean(cid):
    e = idn.build_case(cid, {"N": 4, "b": 0.0})
    h = idn.build_case(cid, {"N": 4, "b": 1e-10})
    f = idn.default_profiles(e)[0]
    ve = [t.value for t in idn.verify(e, f=f).terms]
    vh = [t.value for t in idn.verify(h, f=f).terms]
    # terms that vanish at b = 0 are O(b)
    assert np.allclose(vh, ve, rtol=1e-8, atol=1e-8 * max(abs(v) for v in ve))


@pytest.mark.parametrize("N", [3, 5])
@pytest.mark.parametrize("cid", ["T6-ballmodel", "V2-hyperbolic"])
def test_ball_chart_oracle(cid, N):
    case = idn.build_case(cid, {"N": N})
    for f in idn.default_profiles(case, ell=2):
        rep = idn.verify_ballmodel_oracle(case, f)
        assert rep.extra["chart_rel_diff_max"] <= 1e-9
        assert rep.passed


def test_ball_chart_oracle_needs_ball_case():
    with pytest.raises(idn.CaseError):
        idn.verify_ballmodel_oracle(idn.build_case("T3.1", {"N": 3}))


def test_reduce_against_trapezoid():
    m = ModelManifold(3, 1.0)
    f = idn.TestProfile("poly-bump", 1.0, 0.5, ell=1)
    t = idn.Term("test", "lhs", 1.0, lambda r: np.ones_like(r), idn.GRAD_SQ)
    fn = idn.reduce(f, m, t)
    from hardyforge.quadrature import integrate
    val, _ = integrate(fn, 0.5, 1.5)
    assert val == pytest.approx(trapezoid_oracle(fn, 0.5, 1.5, 200_000), rel=1e-9)


def test_hyp_remainder_series_switch():
    import mpmath as mp
    for x in (1e-4, 0.0499, 0.05, 0.5, 5.0):
        with mp.workdps(50):
            X = mp.mpf(x)
            ref = float((X * mp.cosh(X) - mp.sinh(X)) / (X * X * mp.sinh(X)))
        assert float(idn.hyp_remainder(x)) == pytest.approx(ref, rel=1e-12)


def test_c4_stability_over_radii():
    # the supremum over R is probed at a few radii only
    for R in (0.7, 1.2, 2.0, 4.0):
        case = idn.build_case("C4-stability", {"N": 4, "R": R, "lambda": 0.5})
        for f in idn.default_profiles(case):
            rep = idn.verify(case, f=f)
            assert rep.passed
            assert rep.margins["stability"] >= 0.0


def test_c4_tail_vanishes_when_R_outside_support():
    case = idn.build_case("C4-stability", {"N": 3, "R": 5.0})
    f = idn.TestProfile("bump", 1.5, 1.0)
    rep = idn.verify(case, f=f)
    assert rep.passed


def test_shifted_profile_is_flat_at_R():
    f = idn.TestProfile("bump", 1.0, 0.6, flat_at=1.0, value_at_R=0.7)
    g, dg = f.radial(np.array([1.0]))
    assert g[0] == 0.0 and dg[0] == 0.0


@pytest.mark.parametrize("cid,params", [
    ("nope", {"N": 3}),
    ("T3.1", {}),
    ("T3.1", {"N": 2}),
    ("T3.1", {"N": 3, "b": 0.5}),
    ("C1", {"N": 4, "lambda": 2.0}),
    ("T3.3", {"N": 4, "alpha": 3.0}),
    ("CT1-ineq", {"N": 4, "b": 0.5, "b_cmp": 1.0}),
    ("T1-generic", {"N": 4, "pair": "hyperbolic-G", "bogus": 1}),
    ("T3.1", {"N": 4, "variant": "sideways"}),
])
def test_build_case_rejects(cid, params):
    with pytest.raises(idn.CaseError):
        idn.build_case(cid, params)


def test_profile_must_fit_interval():
    case = idn.build_case("C2", {"N": 3, "R": 1.0})
    with pytest.raises(idn.CaseError):
        idn.verify(case, f=idn.TestProfile("bump", 0.8, 0.3))


def test_shifted_case_needs_flat_profile():
    case = idn.build_case("C3-global", {"N": 3})
    with pytest.raises(idn.CaseError):
        idn.verify(case, f=idn.TestProfile("bump", 1.5, 1.0))


def test_pinned_curvature_enforced_in_verify():
    case = idn.build_case("T3.1", {"N": 3})
    with pytest.raises(idn.CaseError):
        idn.verify(case, ModelManifold(3, 0.0))


@pytest.mark.parametrize("spec", ["hat:c=1,w=1", "bump:c=1", "bump:c=0.5,w=0.5", "bump:c=x,w=1", "bump:q=1"])
def test_bad_profiles(spec):
    with pytest.raises(idn.CaseError):
        idn.parse_profile(spec)


def test_parse_profile_round_trip():
    f = idn.parse_profile("skew-bump:c=2.0,w=1.2", ell=2)
    assert (f.kind, f.c, f.w, f.ell) == ("skew-bump", 2.0, 1.2, 2)


def test_report_dict_layout():
    rep = idn.verify(idn.build_case("T3.3", {"N": 4}))
    d = rep.to_dict()
    assert set(d) >= {"meta", "terms", "lhs", "rhs", "abs_residual", "rel_residual", "pass", "margins"}
    assert set(d["meta"]) >= {"case", "N", "b", "params", "profile", "tol"}
    assert all(set(t) == {"name", "side", "value", "err_est"} for t in d["terms"])
    assert math.isclose(d["lhs"], sum(t["value"] for t in d["terms"] if t["side"] == "lhs"), rel_tol=1e-14)
