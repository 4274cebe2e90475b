r"""Dirichlet spectral data of the cross-section ``O = C ∩ S^{d-1}``.

For each supported cone we provide the eigenvalues :math:`\lambda_j` of the
Dirichlet Laplace-Beltrami operator on ``O``, the exponents
:math:`\alpha_j = \sqrt{\lambda_j + (d/2 - 1)^2}`, eigenfunction evaluators
with unit :math:`L^2(O, \sigma)` norm, and :math:`\int_O m_1\, d\sigma`.

* Wedges have a closed-form basis of any length,
  :math:`m_j(\varphi) = \sqrt{2/\beta}\,\sin(j\pi\varphi/\beta)`.
* Circular cones only carry the principal axisymmetric mode
  :math:`m_1(\theta) = N P_\nu(\cos\theta)`, where :math:`\nu` is the first
  root of :math:`\nu \mapsto P_\nu(\cos\theta_0)` and
  :math:`\lambda_1 = \nu(\nu+1)`.
* Half-spaces in any dimension have :math:`\lambda_1 = d - 1` and
  :math:`m_1 = N\cos\theta`.

Angular coordinates follow :func:`cone_meander.cones.polar`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .cones import Circular3D, ConeSpec, HalfSpace, Wedge
from .errors import DomainError, NumericError
from .specfun import legendre_p

__all__ = [
    "SpectralBasis",
    "wedge_spectrum",
    "circular_cone_principal",
    "circular_spectrum",
    "halfspace_spectrum",
    "spectral_basis",
    "principal_eigenfunction",
    "eigenfunction",
    "m1_surface_integral",
    "sphere_area",
    "cap_integral",
]

_BOUNDARY_SLACK = 1e-12


def sphere_area(k: int) -> float:
    """Surface measure of the unit sphere ``S^k`` in ``R^{k+1}`` (``S^0`` has measure 2)."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


@dataclass(frozen=True)
class SpectralBasis:
    """Spectral data of a cone cross-section.

    ``lambdas`` and ``alphas`` are sorted ascending; only wedges have more
    than one entry.  ``norm`` is the constant ``N`` of the axisymmetric
    principal eigenfunction and ``nu`` the Legendre degree for circular cones.
    """

    cone: ConeSpec
    d: int
    lambdas: np.ndarray
    alphas: np.ndarray
    m1_integral: float
    norm: float = 1.0
    nu: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def J(self) -> int:
        return len(self.lambdas)

    @property
    def lambda1(self) -> float:
        return float(self.lambdas[0])

    @property
    def alpha1(self) -> float:
        return float(self.alphas[0])

    @property
    def exit_exponent(self) -> float:
        """Power ``-alpha1/2 + (d-2)/4`` of the meander's exit-time tail."""
        return -0.5 * self.alpha1 + (self.d - 2) / 4.0

    @property
    def angular_max(self) -> float:
        """Upper end of the angular coordinate range."""
        c = self.cone
        if isinstance(c, Wedge):
            return c.beta
        if isinstance(c, Circular3D):
            return c.theta0
        return math.pi / 2 if c.d > 1 else 0.0

    def m(self, j: int, angular):
        """Evaluate ``m_j`` (1-based index) at ``angular``."""
        return eigenfunction(self, j, angular)

    def m1(self, angular):
        return eigenfunction(self, 1, angular)


def _wedge_m(beta: float, j: int, phi):
    return math.sqrt(2.0 / beta) * np.sin(j * math.pi * np.asarray(phi, dtype=float) / beta)


def wedge_spectrum(beta: float, J: int = 50) -> SpectralBasis:
    """Closed-form Dirichlet basis of the arc ``(0, beta)``: ``lambda_j = (j pi / beta)^2``."""
    cone = Wedge(beta)
    if int(J) != J or J < 1:
        raise DomainError(f"J must be a positive integer, got {J!r}")
    j = np.arange(1, int(J) + 1, dtype=float)
    alphas = j * math.pi / beta
    lambdas = alphas**2  # d = 2: alpha_j = sqrt(lambda_j)
    m1_int = math.sqrt(2.0 / beta) * 2.0 * beta / math.pi
    return SpectralBasis(cone, 2, lambdas, alphas, m1_int)


def circular_cone_principal(theta0: float, tol: float = 1e-10, scan_step: float = 0.5, nu_max: float = 200.0):
    """Principal axisymmetric Dirichlet mode of the spherical cap of half-angle ``theta0``.

    The degree ``nu`` is the smallest positive root of ``P_nu(cos theta0)``,
    bracketed by a scan over ``[scan_step, nu_max]`` and refined by bisection
    until the bracket is narrower than ``tol`` (bisection is carried on to
    float resolution, so the residual is as small as the series allows).

    Returns
    -------
    tuple
        ``(nu, lambda1, alpha1)`` with ``lambda1 = nu (nu + 1)`` and
        ``alpha1 = nu + 1/2``.

    Raises
    ------
    NumericError
        No sign change found in the scan range.
    """
    Circular3D(theta0)  # validates the range
    u0 = math.cos(theta0)

    def f(nu):
        return legendre_p(nu, u0)

    grid = np.arange(scan_step, nu_max + 0.5 * scan_step, scan_step)
    lo = hi = None
    f_prev = f(0.0)
    nu_prev = 0.0
    for nu in grid:
        val = f(nu)
        if val == 0.0:
            return _principal_triplet(float(nu))
        if (val > 0) != (f_prev > 0):
            lo, hi = nu_prev, float(nu)
            break
        nu_prev, f_prev = float(nu), val
    if lo is None:
        raise NumericError(
            f"no sign change of P_nu(cos {theta0}) for nu in (0, {nu_max}]; "
            f"last value {f_prev:.3e} at nu={nu_prev}; half-angle too small for the scan range"
        )
    f_lo = f(lo)
    while hi - lo > 0.0:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    if hi - lo > tol:
        raise NumericError(f"bisection bracket [{lo}, {hi}] wider than tol={tol}")
    return _principal_triplet(nu)


def _principal_triplet(nu: float):
    lam = nu * (nu + 1.0)
    return nu, lam, math.sqrt(lam + 0.25)


def cap_integral(f, theta_max: float, d: int, tol: float = 1e-10) -> float:
    """Integrate an axisymmetric ``f(theta)`` over the cap ``{colatitude < theta_max}`` of ``S^{d-1}``.

    Uses ``sigma(d eta) = |S^{d-2}| sin(theta)^{d-2} d theta``.
    """
    if d == 1:
        return float(f(np.array([0.0]))[0])
    area = sphere_area(d - 2)
    return area * quadrature.integrate_adaptive(lambda th: f(th) * np.sin(th) ** (d - 2), 0.0, theta_max, tol=tol)


def circular_spectrum(theta0: float, tol: float = 1e-10) -> SpectralBasis:
    """Principal-mode basis of ``Circular3D(theta0)`` with unit-norm ``m_1``."""
    cone = Circular3D(theta0)
    nu, lam, alpha = circular_cone_principal(theta0, tol=tol)
    u0 = math.cos(theta0)
    # in u = cos(theta) the cap measure is 2 pi du on [cos theta0, 1]
    sq = 2.0 * math.pi * quadrature.integrate_adaptive(lambda u: legendre_p(nu, u) ** 2, u0, 1.0, tol=1e-13)
    norm = 1.0 / math.sqrt(sq)
    m1_int = 2.0 * math.pi * norm * quadrature.integrate_adaptive(lambda u: legendre_p(nu, u), u0, 1.0, tol=1e-13)
    return SpectralBasis(cone, 3, np.array([lam]), np.array([alpha]), m1_int, norm=norm, nu=nu)


def halfspace_spectrum(d: int) -> SpectralBasis:
    """Principal mode of the hemisphere: ``lambda_1 = d - 1``, ``m_1 = N cos(theta)``."""
    cone = HalfSpace(d)
    lam = float(d - 1)
    alpha = math.sqrt(lam + (d / 2 - 1) ** 2)  # equals d / 2
    if d == 1:
        # O is the single point e1 with counting measure
        return SpectralBasis(cone, 1, np.array([0.0]), np.array([0.5]), 1.0, norm=1.0)
    # int over the hemisphere of cos^2 is |S^{d-1}| / (2 d)
    norm = math.sqrt(2.0 * d / sphere_area(d - 1))
    m1_int = norm * math.pi ** ((d - 1) / 2) / math.gamma((d + 1) / 2)
    return SpectralBasis(cone, d, np.array([lam]), np.array([alpha]), m1_int, norm=norm)


def spectral_basis(cone: ConeSpec, J: int = 50) -> SpectralBasis:
    """Spectral basis appropriate for ``cone`` (``J`` only matters for wedges)."""
    if isinstance(cone, Wedge):
        return wedge_spectrum(cone.beta, J)
    if isinstance(cone, Circular3D):
        return circular_spectrum(cone.theta0)
    if isinstance(cone, HalfSpace):
        return halfspace_spectrum(cone.d)
    raise DomainError(f"unsupported cone {cone!r}")


def _check_angular(basis: SpectralBasis, a: np.ndarray):
    top = basis.angular_max
    if np.any(a < -_BOUNDARY_SLACK) or np.any(a > top + _BOUNDARY_SLACK) or not np.all(np.isfinite(a)):
        raise DomainError(f"angular coordinate outside [0, {top}]")


def eigenfunction(basis: SpectralBasis, j: int, angular):
    """Evaluate the ``j``-th eigenfunction (1-based) at cap coordinate(s)."""
    a = np.asarray(angular, dtype=float)
    _check_angular(basis, a)
    if not (1 <= j <= basis.J):
        raise DomainError(f"mode index {j} outside 1..{basis.J}")
    cone = basis.cone
    if isinstance(cone, Wedge):
        out = _wedge_m(cone.beta, j, a)
    elif isinstance(cone, Circular3D):
        out = basis.norm * legendre_p(basis.nu, np.cos(np.clip(a, 0.0, cone.theta0)))
    else:
        out = basis.norm * np.cos(a)
    return float(out) if np.ndim(out) == 0 else out


def principal_eigenfunction(basis: SpectralBasis, angular):
    """``m_1`` at cap coordinate(s); positive inside the cap, zero on its rim."""
    return eigenfunction(basis, 1, angular)


def m1_surface_integral(basis: SpectralBasis, tol: float = 1e-10) -> float:
    r"""Recompute :math:`\int_O m_1\, d\sigma` by Gauss-Legendre quadrature with node doubling."""
    cone = basis.cone
    if isinstance(cone, Wedge):
        return quadrature.integrate_adaptive(lambda p: _wedge_m(cone.beta, 1, p), 0.0, cone.beta, tol=tol)
    return cap_integral(lambda th: eigenfunction(basis, 1, th), basis.angular_max, basis.d, tol=tol)
