import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from casimir_response.quadrature import (
    ball_transform,
    composite_gauss_legendre,
    cosine_taper,
    gauss_legendre,
    geometric_panels,
    sinc,
    uniform_panels,
)


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(0.0, 2.0, 5)
    # degree 9 is integrated exactly by 5 nodes
    assert np.sum(w * x**9) == pytest.approx(2.0**10 / 10, rel=1e-14)


def test_composite_rule_total_weight():
    x, w = composite_gauss_legendre(uniform_panels(-1.0, 3.0, 0.3), 8)
    assert np.sum(w) == pytest.approx(4.0, rel=1e-14)
    assert np.sum(w * np.exp(x)) == pytest.approx(np.exp(3.0) - np.exp(-1.0), rel=1e-13)


def test_geometric_panels_reach_zero_and_top():
    pts = geometric_panels(8.0, 1e-3)
    assert pts[0] == 0.0 and pts[-1] == 8.0
    assert np.all(np.diff(pts) > 0)
    assert pts[1] <= 1e-3


def test_cosine_taper():
    t = np.linspace(0.0, 10.0, 1001)
    w = cosine_taper(t, 0.0, 10.0, 0.1)
    assert w[0] == 0.0 and w[-1] == 0.0
    assert np.all(w[(t > 1.0) & (t < 9.0)] == 1.0)


def test_sinc():
    assert sinc(0.0) == 1.0
    assert sinc(np.pi / 2) == pytest.approx(2 / np.pi, rel=1e-15)


@pytest.mark.parametrize("q", [1e-4, 0.3, 2.0, 17.0])
def test_ball_transform_against_radial_quadrature(q):
    radius = 1.3
    ref = integrate.quad(lambda r: 4 * np.pi * r * r * sinc(q * r), 0.0, radius, epsabs=0, epsrel=1e-13)[0]
    assert ball_transform(q, radius) == pytest.approx(ref, rel=1e-11)


@given(st.floats(1e-3, 3e-2))
def test_ball_transform_continuous_at_series_switch(x):
    # closed form still accurate to ~eps/x^2 here, so the series must agree with it
    a = ball_transform(x, 1.0)
    b = 4 * np.pi * (np.sin(x) - x * np.cos(x)) / x**3
    assert a == pytest.approx(b, rel=1e-6)
