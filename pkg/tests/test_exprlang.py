import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from hardyforge import exprlang as el


def test_evaluate_density_ratio():
    e = el.parse("(sinh(r)/r)^(N-1)")
    assert el.evaluate(e, 1.0, {"N": 3}) == pytest.approx(1.3810978455418155, rel=1e-15)


def test_vectorised_evaluation():
    e = el.parse("r^2 + 1")
    out = el.evaluate(e, np.array([0.0, 1.0, 2.0]), {})
    assert np.array_equal(out, [1.0, 2.0, 5.0])


@pytest.mark.parametrize("src,offset", [("1 + * 2", 4), ("(1", 2), ("sinh(r", 6), ("bogus(", 0), ("2 $ 3", 2)])
def test_parse_error_offsets(src, offset):
    with pytest.raises(el.ParseError) as exc:
        el.parse(src)
    assert exc.value.offset == offset


def test_unknown_identifier_is_parse_error():
    with pytest.raises(el.UnknownIdentifierError):
        el.parse("log(r)")


def test_power_is_right_associative():
    assert el.evaluate(el.parse("2^3^2"), 1.0, {}) == 512.0
    assert el.evaluate(el.parse("-r^2"), 2.0, {}) == -4.0
    assert el.evaluate(el.parse("r^-(2)"), 2.0, {}) == 0.25


@pytest.mark.parametrize("src,r", [("ln(r - 2)", 1.0), ("sqrt(r - 2)", 1.0), ("1/(r - 1)", 1.0),
                                   ("coth(r - 1)", 1.0), ("sign(r - 1)", 1.0)])
def test_domain_errors_name_subexpression(src, r):
    with pytest.raises(el.DomainError) as exc:
        el.evaluate(el.parse(src), r, {})
    assert exc.value.subexpr


def test_unbound_parameter():
    with pytest.raises(el.UnboundParameterError):
        el.evaluate(el.parse("r^lambda"), 1.0, {})


def test_bessel_call():
    from hardyforge import specfun
    assert el.evaluate(el.parse("besselj(0, r)"), 2.5, {}) == pytest.approx(specfun.bessel_j(0.0, 2.5))
    with pytest.raises(el.UnsupportedNodeError):
        el.deriv(el.parse("besselj(0, r)"))


def test_log_derivative_of_critical_phi():
    e = el.deriv(el.parse("sqrt(abs(ln(r/R)))"))
    for r in (0.2, 0.7, 1.5):
        expect = math.copysign(1.0, math.log(r)) / (2 * r * math.sqrt(abs(math.log(r))))
        assert el.evaluate(e, r, {"R": 1.0}) == pytest.approx(expect, rel=1e-13)


def test_derivative_folds_constants():
    assert el.to_source(el.deriv(el.parse("3"))) == "0"
    assert el.to_source(el.deriv(el.parse("r"))) == "1"


# random expressions over r built from functions that stay finite on [0.5, 2]
_leaf = st.one_of(st.just("r"), st.integers(1, 5).map(str), st.sampled_from(["N", "pi"]))


def _grow(children):
    unary = st.tuples(st.sampled_from(["sinh", "cosh", "exp", "tanh", "sin", "cos"]), children).map(
        lambda t: f"{t[0]}({t[1]})")
    binary = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})")
    power = children.map(lambda c: f"({c})^2")
    return st.one_of(unary, binary, power)


exprs = st.recursive(_leaf, _grow, max_leaves=6)


@settings(max_examples=150, deadline=None)
@given(src=exprs)
def test_to_source_round_trip(src):
    e = el.parse(src)
    assert el.parse(el.to_source(e)) == e


@settings(max_examples=150, deadline=None)
@given(src=exprs, r=st.floats(0.5, 2.0))
def test_derivative_matches_finite_difference(src, r):
    e = el.parse(src)
    b = {"N": 4}
    f = lambda x: el.evaluate(e, x, b)  # noqa: E731
    try:
        vals = [f(r - 1e-5), f(r + 1e-5), el.evaluate(el.deriv(e), r, b)]
    except el.DomainError:
        assume(False)
    assume(all(abs(v) < 1e6 for v in vals))
    fd = (vals[1] - vals[0]) / 2e-5
    assert vals[2] == pytest.approx(fd, rel=1e-5, abs=1e-5)
