import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardyforge import specfun

# (alpha, x, J_alpha(x), J_alpha'(x)) from mpmath at 40 digits
MPMATH_TABLE = [
    (0.0, 1.0, 0.76519768655796655145, -0.44005058574493351596),
    (0.0, 2.5, -0.048383776468197996327, -0.49709410246427403801),
    (0.5, 3.0, 0.065008182877375778114, -0.4668835179408624752),
    (1.0, 10.0, 0.04347274616886143667, -0.25028303906823447886),
    (2.5, 0.1, 0.00016808871900334129365, 0.0041998163264166114907),
    (20.0, 5.0, 2.7703300521289416874e-11, 1.0746938209840447834e-10),
    (0.0, 30.0, -0.086367983581040211336, 0.11875106261662293652),
    (3.0, 25.5, 0.038687170306616197514, -0.1534801412293112655),
    (1.0, 0.001, 0.00049999993750000261457, 0.49999981250001302083),
]

ZEROS = {
    0.0: 2.4048255576957727686,
    0.5: math.pi,
    1.0: 3.8317059702075123156,
    2.5: 5.7634591968945497914,
    5.0: 8.7714838159599540191,
}


@pytest.mark.parametrize("alpha,x,j,dj", MPMATH_TABLE)
def test_values_match_mpmath(alpha, x, j, dj):
    assert specfun.bessel_j(alpha, x) == pytest.approx(j, rel=1e-12, abs=1e-15)
    assert specfun.bessel_j_deriv(alpha, x) == pytest.approx(dj, rel=1e-11, abs=1e-15)


@pytest.mark.parametrize("alpha,z", sorted(ZEROS.items()))
def test_first_zero(alpha, z):
    assert specfun.bessel_first_zero(alpha) == pytest.approx(z, rel=1e-13)


def test_z0_matches_quoted_digits():
    assert f"{specfun.bessel_first_zero(0.0):.4f}" == "2.4048"


def test_half_order_zero_is_pi():
    assert abs(specfun.bessel_first_zero(0.5) - math.pi) <= 1e-10


def test_values_at_origin():
    assert specfun.bessel_j(0.0, 0.0) == 1.0
    assert specfun.bessel_j(1.5, 0.0) == 0.0


def test_array_matches_scalar():
    x = np.linspace(0.0, 40.0, 57)
    arr = specfun.bessel_j_array(1.5, x)
    # the recurrence start depends on the largest argument, so agreement is to rounding only
    assert np.allclose(arr, [specfun.bessel_j(1.5, v) for v in x], rtol=1e-13, atol=1e-15)


def test_series_and_recurrence_agree_at_switch():
    # the two evaluation paths meet at x = 12 for small orders
    j12 = 0.047689310796833536624  # mpmath
    assert specfun.bessel_j(0.0, np.nextafter(12.0, 0.0)) == pytest.approx(j12, rel=1e-12)
    assert specfun.bessel_j(0.0, 12.0) == pytest.approx(j12, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(1.0, 19.0), x=st.floats(0.2, 40.0))
def test_three_term_recurrence(alpha, x):
    lhs = specfun.bessel_j(alpha - 1.0, x) + specfun.bessel_j(alpha + 1.0, x)
    rhs = 2.0 * alpha / x * specfun.bessel_j(alpha, x)
    scale = max(abs(specfun.bessel_j(alpha - 1.0, x)), abs(specfun.bessel_j(alpha + 1.0, x)), 1e-300)
    assert abs(lhs - rhs) <= 1e-12 * max(scale, abs(rhs))


@pytest.mark.parametrize("bad", [-0.5, 20.5, float("nan")])
def test_order_outside_supported_range(bad):
    with pytest.raises(specfun.DomainError):
        specfun.bessel_j(bad, 1.0)


def test_negative_argument_rejected():
    with pytest.raises(specfun.DomainError):
        specfun.bessel_j(0.0, -1.0)


def test_derivative_at_zero_needs_positive_x_for_small_order():
    with pytest.raises(specfun.DomainError):
        specfun.bessel_j_deriv(0.5, 0.0)


@pytest.mark.parametrize("n2", range(1, 41))
def test_gamma_half_integer(n2):
    assert specfun.gamma_half_integer(n2) == pytest.approx(math.gamma(n2 / 2.0), rel=1e-14)


def test_gamma_half_integer_domain():
    with pytest.raises(specfun.DomainError):
        specfun.gamma_half_integer(0)


@pytest.mark.parametrize("N,area", [(2, 2 * math.pi), (3, 4 * math.pi), (4, 2 * math.pi ** 2),
                                    (5, 8 * math.pi ** 2 / 3)])
def test_sphere_area(N, area):
    assert specfun.sphere_area(N) == pytest.approx(area, rel=1e-14)
