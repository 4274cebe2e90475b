import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from cone_meander.errors import ConvergenceError, DomainError
from cone_meander.specfun import SeriesControl, bessel_i, legendre_p, log_bessel_i, log_gamma


def _bessel_oracle(nu, x, terms=200):
    # plain power series at 40 digits
    with mpmath.workdps(40):
        s = mpmath.mpf(0)
        for m in range(terms):
            s += (mpmath.mpf(x) / 2) ** (nu + 2 * m) / (mpmath.factorial(m) * mpmath.gamma(nu + m + 1))
        return float(s)


def test_bessel_at_origin():
    assert bessel_i(0, 0) == 1.0
    assert bessel_i(1.5, 0) == 0.0


def test_bessel_half_integer_value():
    assert bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-13)


def test_bessel_against_extended_series():
    assert bessel_i(1, 2) == pytest.approx(_bessel_oracle(1, 2), rel=1e-12)


@pytest.mark.parametrize("nu", [0.0, 0.3, 2.0, 7.5, 40.0, 120.0])
@pytest.mark.parametrize("x", [0.01, 1.0, 10.0, 45.0])
def test_bessel_matches_scipy(nu, x):
    ref = special.ive(nu, x) * math.exp(x)
    if ref == 0.0 or not np.isfinite(ref):
        ref = _bessel_oracle(nu, x, terms=400)
    assert bessel_i(nu, x) == pytest.approx(ref, rel=2e-12)


def test_log_bessel_no_overflow_for_large_order():
    val = log_bessel_i(100.0, 30.0)
    ref = float(mpmath.log(mpmath.besseli(100, 30)))
    assert val == pytest.approx(ref, rel=1e-12)


def test_half_integer_closed_forms():
    x = np.linspace(0.05, 20.0, 200)
    i12 = np.sqrt(2 / (np.pi * x)) * np.sinh(x)
    i32 = np.sqrt(2 / (np.pi * x)) * (np.cosh(x) - np.sinh(x) / x)
    np.testing.assert_allclose(bessel_i(0.5, x), i12, rtol=1e-10)
    np.testing.assert_allclose(bessel_i(1.5, x), i32, rtol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 30.0), st.floats(0.01, 40.0), st.floats(0.01, 5.0))
def test_bessel_positive_and_increasing(nu, x, dx):
    a, b = bessel_i(nu, x), bessel_i(nu, x + dx)
    assert a > 0
    assert b > a


def test_bessel_rejects_bad_input():
    with pytest.raises(DomainError):
        bessel_i(-1.0, 1.0)
    with pytest.raises(DomainError):
        bessel_i(1.0, float("nan"))


def test_bessel_term_cap_raises():
    with pytest.raises(ConvergenceError):
        bessel_i(0.0, 40.0, SeriesControl(max_terms=5))


def test_log_gamma_anchors():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-15)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)


@pytest.mark.parametrize("x", [0.5, 1.7, 10.25, 77.0, 200.0])
def test_log_gamma_accuracy(x):
    assert log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-13)


def test_log_gamma_domain():
    with pytest.raises(DomainError):
        log_gamma(0.0)
    with pytest.raises(DomainError):
        log_gamma(np.array([1.0, -2.0]))


def test_series_control_validation():
    with pytest.raises(DomainError):
        SeriesControl(rel_tol=0.0)
    with pytest.raises(DomainError):
        SeriesControl(max_terms=0)


@pytest.mark.parametrize("nu", [0.0, 0.7, 3.0, 12.4])
def test_legendre_at_one(nu):
    assert legendre_p(nu, 1.0) == 1.0


def test_legendre_polynomial_case():
    assert legendre_p(2, 0.5) == pytest.approx(-0.125, abs=1e-15)


@pytest.mark.parametrize("nu", [0.5, 1.3, 2.5, 3.7])
def test_legendre_at_zero_gamma_oracle(nu):
    ref = math.sqrt(math.pi) / (math.gamma(1 + nu / 2) * math.gamma((1 - nu) / 2))
    assert legendre_p(nu, 0.0) == pytest.approx(ref, rel=1e-11, abs=1e-13)


@pytest.mark.parametrize("n", range(0, 8))
def test_legendre_integer_degree(n):
    x = np.linspace(-0.9, 1.0, 101)
    np.testing.assert_allclose(legendre_p(n, x), special.eval_legendre(n, x), rtol=0, atol=1e-12)


@pytest.mark.parametrize("nu", [1.0, 2.0, 1.5, 3.5, 2.25])
def test_legendre_recurrence(nu):
    for x in (-0.5, 0.0, 0.3, 0.8):
        lhs = (2 * nu + 1) * x * legendre_p(nu, x)
        rhs = (nu + 1) * legendre_p(nu + 1, x) + nu * legendre_p(nu - 1, x)
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_legendre_real_degree_against_mpmath():
    for nu, x in [(2.5479, 0.7071), (1.777, 0.5), (10.2, -0.3)]:
        assert legendre_p(nu, x) == pytest.approx(float(mpmath.legenp(nu, 0, x)), rel=1e-10, abs=1e-12)


def test_legendre_domain_and_convergence():
    with pytest.raises(DomainError):
        legendre_p(1.0, 1.5)
    with pytest.raises(DomainError):
        legendre_p(-0.5, 0.0)
    # the series near x = -1 converges too slowly for the term cap
    with pytest.raises(ConvergenceError):
        legendre_p(0.5, -0.9999, SeriesControl(max_terms=50))
