from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from casimir_response.gnm import TWO_PI_CUBED, GnmTable, gnm_exact, gnm_numeric, gnm_prefactor


def sympy_kernel(order):
    # x = w/Omega splits the pair frequency; the kernel is the moment of the
    # (x, mu) weight x^4 (1-x)^3 (1+mu^2) against (q/Omega)^(2 order)
    x, mu = sp.symbols("x mu")
    q2 = x**2 + (1 - x) ** 2 + 2 * x * (1 - x) * mu
    integrand = sp.expand(x**4 * (1 - x) ** 3 * (1 + mu**2) * q2**order)
    return sp.integrate(sp.integrate(integrand, (mu, -1, 1)), (x, 0, 1))


@pytest.mark.parametrize("order", range(7))
def test_kernel_matches_symbolic_integral(order):
    value = gnm_exact(order, 0)
    assert sp.Rational(value.numerator, value.denominator) == sympy_kernel(order)


def test_leading_coefficient_is_one_over_105():
    assert gnm_exact(0, 0) == Fraction(1, 105)
    assert isinstance(gnm_exact(0, 0), Fraction)


def test_known_low_order_values():
    assert [gnm_exact(n, 0) for n in range(5)] == [
        Fraction(1, 105),
        Fraction(1, 189),
        Fraction(13, 3465),
        Fraction(19, 6435),
        Fraction(79, 32175),
    ]


def test_kernel_decreases_with_order():
    vals = [gnm_exact(n, 0) for n in range(12)]
    assert all(a > b > 0 for a, b in zip(vals, vals[1:]))


@given(st.integers(0, 8), st.integers(0, 8))
def test_symmetric_and_antidiagonal(n, m):
    assert gnm_exact(n, m) == gnm_exact(m, n) == gnm_exact(n + m, 0)


def test_negative_indices_rejected():
    with pytest.raises(ValueError):
        gnm_exact(-1, 0)


def test_numeric_value_at_unit_epsilon():
    assert gnm_numeric(0, 0, 1.0) == pytest.approx(1.0 / 105.0 / (2 * 3.141592653589793) ** 3, rel=1e-15)


@given(st.integers(0, 4), st.integers(0, 4), st.floats(1.0, 20.0))
def test_epsilon_scaling(n, m, eps):
    ratio = gnm_numeric(n, m, 2 * eps) / gnm_numeric(n, m, eps)
    assert ratio == pytest.approx(2.0 ** (3 + n + m), rel=4e-16)


def test_numeric_rounded_once():
    eps = 1.78
    exact = gnm_exact(1, 2) * Fraction(eps) ** 6 / Fraction(TWO_PI_CUBED)
    assert gnm_numeric(1, 2, eps) == float(exact)
    assert gnm_prefactor(1, 2, eps) == Fraction(eps) ** 6 / Fraction(TWO_PI_CUBED)


def test_epsilon_below_one_rejected():
    with pytest.raises(ValueError):
        gnm_numeric(0, 0, 0.5)


def test_table_rows():
    table = GnmTable.build(3, 1.5)
    rows = list(table.rows())
    assert len(rows) == 16
    assert rows[0][:4] == (0, 0, 1, 105)
    for n, m, num, den, value in rows:
        assert Fraction(num, den) == gnm_exact(n, m)
        assert value == gnm_numeric(n, m, 1.5)
    with pytest.raises(ValueError):
        GnmTable.build(-1)
