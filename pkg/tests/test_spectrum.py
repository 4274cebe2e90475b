import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cone_meander import quadrature
from cone_meander.cones import Circular3D, HalfSpace, Wedge
from cone_meander.errors import DomainError
from cone_meander.specfun import legendre_p
from cone_meander.spectrum import (
    cap_integral,
    circular_cone_principal,
    eigenfunction,
    halfspace_spectrum,
    m1_surface_integral,
    principal_eigenfunction,
    spectral_basis,
    wedge_spectrum,
)


def test_wedge_closed_forms():
    b = wedge_spectrum(math.pi / 2, 5)
    assert b.lambda1 == pytest.approx(4.0)
    assert b.alpha1 == pytest.approx(2.0)
    assert wedge_spectrum(math.pi, 1).alpha1 == pytest.approx(1.0)
    np.testing.assert_allclose(b.alphas, np.sqrt(b.lambdas))
    assert np.all(np.diff(b.lambdas) > 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, math.pi), st.integers(1, 6))
def test_wedge_modes_orthonormal(beta, j):
    b = wedge_spectrum(beta, 6)
    norm = quadrature.integrate(lambda p: eigenfunction(b, j, p) ** 2, 0.0, beta, n=64)
    assert norm == pytest.approx(1.0, abs=1e-8)
    k = 1 + j % 6
    if k != j:
        cross = quadrature.integrate(lambda p: eigenfunction(b, j, p) * eigenfunction(b, k, p), 0.0, beta, n=64)
        assert abs(cross) < 1e-8


def test_wedge_invalid():
    with pytest.raises(DomainError):
        wedge_spectrum(0.0)
    with pytest.raises(DomainError):
        wedge_spectrum(1.0, 0)


def test_circular_half_angle_right():
    nu, lam, alpha = circular_cone_principal(math.pi / 2)
    assert nu == pytest.approx(1.0, abs=1e-10)
    assert alpha == pytest.approx(1.5, abs=1e-10)
    assert lam == pytest.approx(2.0, abs=1e-9)


def _scan_oracle(u0, step=1e-4):
    # fine-grid sign scan of P_nu(u0), then bisection
    grid = np.arange(step, 20.0, step)
    vals = np.array([legendre_p(v, u0) for v in grid[:40000]])
    i = int(np.flatnonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0])
    lo, hi = grid[i], grid[i + 1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.sign(legendre_p(mid, u0)) == np.sign(legendre_p(lo, u0)):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_circular_matches_scan_oracle():
    nu, _, _ = circular_cone_principal(math.pi / 3)
    assert nu == pytest.approx(_scan_oracle(0.5), abs=1e-10)


def test_circular_monotone_in_half_angle():
    assert circular_cone_principal(math.pi / 4)[0] > circular_cone_principal(math.pi / 2)[0]


def test_circular_consistent_triplet():
    nu, lam, alpha = circular_cone_principal(0.6)
    assert lam == pytest.approx(nu * (nu + 1))
    assert alpha == pytest.approx(math.sqrt(lam + 0.25))
    assert abs(legendre_p(nu, math.cos(0.6))) < 1e-10


def test_principal_eigenfunction_values():
    b = wedge_spectrum(math.pi / 2)
    assert principal_eigenfunction(b, math.pi / 4) == pytest.approx(2 / math.sqrt(math.pi))
    c = spectral_basis(Circular3D(math.pi / 2))
    assert principal_eigenfunction(c, 0.0) == pytest.approx(c.norm)
    for basis in (b, c, spectral_basis(Circular3D(0.8))):
        assert abs(principal_eigenfunction(basis, basis.angular_max)) < 1e-9
        inner = np.linspace(0.01, 0.99, 30) * basis.angular_max
        assert np.all(principal_eigenfunction(basis, inner) > 0)
    with pytest.raises(DomainError):
        principal_eigenfunction(b, 2.0)


@pytest.mark.parametrize("theta0", [math.pi / 4, math.pi / 3, math.pi / 2])
def test_circular_unit_norm(theta0):
    b = spectral_basis(Circular3D(theta0))
    sq = cap_integral(lambda th: principal_eigenfunction(b, th) ** 2, theta0, 3)
    assert sq == pytest.approx(1.0, abs=1e-8)


def test_m1_integral_closed_forms():
    b = wedge_spectrum(math.pi)
    assert b.m1_integral == pytest.approx(2 * math.sqrt(2 / math.pi))
    assert m1_surface_integral(b) == pytest.approx(2 * math.sqrt(2 / math.pi), rel=1e-12)
    c = spectral_basis(Circular3D(math.pi / 2))
    assert c.m1_integral == pytest.approx(math.pi * c.norm, rel=1e-10)
    assert c.norm == pytest.approx(math.sqrt(3 / (2 * math.pi)), rel=1e-10)


def test_m1_integral_riemann_oracle():
    beta = 1.234
    b = wedge_spectrum(beta)
    n = 10**6
    phi = (np.arange(n) + 0.5) * beta / n
    riemann = float(np.sum(math.sqrt(2 / beta) * np.sin(math.pi * phi / beta)) * beta / n)
    assert m1_surface_integral(b) == pytest.approx(riemann, abs=1e-8)
    assert b.m1_integral == pytest.approx(riemann, abs=1e-8)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 6])
def test_halfspace_basis(d):
    b = halfspace_spectrum(d)
    assert b.alpha1 == pytest.approx(d / 2)
    assert b.lambda1 == pytest.approx(d - 1)
    if d > 1:
        assert m1_surface_integral(b) == pytest.approx(b.m1_integral, rel=1e-10)
        sq = cap_integral(lambda th: eigenfunction(b, 1, th) ** 2, math.pi / 2, d)
        assert sq == pytest.approx(1.0, rel=1e-10)


def test_circular_quarter_values():
    b = spectral_basis(Circular3D(math.pi / 4))
    assert b.nu == pytest.approx(2.5479, abs=1e-4)
    assert m1_surface_integral(b) == pytest.approx(b.m1_integral, rel=1e-9)


def test_spectral_basis_dispatch():
    assert spectral_basis(Wedge(1.0), 7).J == 7
    assert spectral_basis(HalfSpace(2)).d == 2
    assert spectral_basis(Circular3D(1.0)).J == 1
