r"""Killed heat kernel of a cone, its leading factorisation near the vertex,
the entrance density of the cone meander and its exit-time law.

Notation: ``x = rho * theta`` and ``y = r * eta`` in polar form, ``d`` the
dimension, :math:`\alpha_1` the principal exponent of the cross-section.

* Heat kernel (wedges, full series)

  .. math::
     p^C(t,x,y) = \frac{e^{-(r^2+\rho^2)/2t}}{t(\rho r)^{d/2-1}}
                  \sum_j I_{\alpha_j}(\rho r/t)\, m_j(\theta) m_j(\eta)

* Leading factors :math:`g(x) = \rho^{\alpha_1-(d/2-1)} m_1(\theta)` and
  :math:`h(t,y) = r^{\alpha_1-(d/2-1)} e^{-r^2/2t} m_1(\eta) /
  (2^{\alpha_1}\Gamma(\alpha_1+1) t^{\alpha_1+1})`.

* Entrance density
  :math:`e(t,y) = c\,t^{-\alpha_1-1} r^{\alpha_1-(d/2-1)} e^{-r^2/2t}
  m_1(\eta)\, W_y(\tau_C > 1-t)` with
  :math:`c^{-1} = 2^{\alpha_1/2+(d-2)/4}\Gamma(\alpha_1/2+(d+2)/4)\int_O m_1`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special as _sp

from . import quadrature
from .cones import Circular3D, ConeSpec, HalfSpace, Wedge, angular_coordinate, inside
from .errors import ConfigError, DomainError
from .spectrum import SpectralBasis, eigenfunction, spectral_basis, sphere_area, wedge_spectrum
from .specfun import log_bessel_i, log_gamma

__all__ = [
    "EntranceLaw",
    "KernelValue",
    "SeriesTruncationWarning",
    "entrance_law",
    "heat_kernel_wedge",
    "wedge_kernel_polar",
    "leading_factors",
    "entrance_density",
    "entrance_density_polar",
    "survival_probability",
    "meander_exit_survival",
    "radial_cdf",
    "radial_pdf",
    "angular_cdf",
    "total_mass",
    "entrance_mass",
    "SURVIVAL_MODES",
]

TAIL_WARN = 1e-8
SURVIVAL_MODES = ("series", "closed_form", "monte_carlo")


class SeriesTruncationWarning(RuntimeWarning):
    """The truncated heat-kernel series has a tail bound above the threshold."""


class KernelValue(NamedTuple):
    value: float
    tail_bound: float
    truncated: bool


@dataclass(frozen=True)
class EntranceLaw:
    """Normalisation constant ``c`` of the entrance density, with its basis."""

    basis: SpectralBasis
    c: float
    alpha1: float
    d: int

    @property
    def cone(self) -> ConeSpec:
        return self.basis.cone


def entrance_law(cone_or_basis, J: int = 50) -> EntranceLaw:
    """Build the :class:`EntranceLaw` of a cone (or of an existing basis)."""
    basis = cone_or_basis if isinstance(cone_or_basis, SpectralBasis) else spectral_basis(cone_or_basis, J)
    a, d = basis.alpha1, basis.d
    log_c_inv = (
        (0.5 * a + (d - 2) / 4.0) * math.log(2.0)
        + log_gamma(0.5 * a + (d + 2) / 4.0)
        + math.log(basis.m1_integral)
    )
    return EntranceLaw(basis, math.exp(-log_c_inv), a, d)


def _polar_arrays(cone: ConeSpec, pts: np.ndarray):
    r = np.sqrt(np.sum(pts**2, axis=-1))
    return r, angular_coordinate(cone, pts)


def _require_inside(cone: ConeSpec, p, what: str) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if not np.all(inside(cone, arr)):
        raise DomainError(f"{what} must lie in the open cone {cone!r}")
    return arr


def _wedge_tail_bound(beta: float, J: int, M: np.ndarray, extra: int = 200) -> np.ndarray:
    # I_a(M) <= (M/2)^a / Gamma(a+1) * exp(M^2 / (4 (a+1))) and |m_j| <= sqrt(2/beta)
    j = np.arange(J + 1, J + 1 + extra, dtype=float)
    a = j * math.pi / beta
    with np.errstate(divide="ignore"):
        logM = np.log(0.5 * np.asarray(M, dtype=float))[..., None]
    logb = a * logM - _sp.gammaln(a + 1.0) + (np.asarray(M)[..., None] ** 2) / (4.0 * (a + 1.0))
    return (2.0 / beta) * np.exp(_sp.logsumexp(logb, axis=-1))


def wedge_kernel_polar(basis: SpectralBasis, t: float, rho, theta, r, eta, with_tail: bool = False):
    """Vectorised wedge heat kernel in polar coordinates (broadcasting inputs).

    Returns the kernel values, and the tail bound of the truncated series
    when ``with_tail`` is set.
    """
    if not isinstance(basis.cone, Wedge):
        raise ConfigError("the full heat-kernel series is only available for wedges")
    beta = basis.cone.beta
    rho, theta, r, eta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (rho, theta, r, eta)))
    M = rho * r / t
    gauss = -(r**2 + rho**2) / (2.0 * t)
    total = np.zeros(M.shape)
    flat_M = M.ravel()
    for j in range(1, basis.J + 1):
        log_i = log_bessel_i(basis.alphas[j - 1], flat_M).reshape(M.shape)
        total += np.exp(log_i + gauss) * eigenfunction(basis, j, theta) * eigenfunction(basis, j, eta)
    total /= t
    # rounding can leave tiny negative values where the kernel vanishes
    total = np.maximum(total, 0.0)
    if not with_tail:
        return total
    tail = _wedge_tail_bound(beta, basis.J, M) * np.exp(gauss) / t
    return total, tail


def heat_kernel_wedge(basis: SpectralBasis, t: float, x, y) -> KernelValue:
    """Killed heat kernel ``p^C(t, x, y)`` of a wedge from its eigenfunction series.

    Emits :class:`SeriesTruncationWarning` when the tail bound of the
    ``basis.J``-term series exceeds ``1e-8``.
    """
    cone = basis.cone
    if not isinstance(cone, Wedge):
        raise ConfigError("heat_kernel_wedge needs a wedge basis")
    if not (t > 0):
        raise DomainError(f"t must be > 0, got {t}")
    x = _require_inside(cone, x, "x")
    y = _require_inside(cone, y, "y")
    rho, th = _polar_arrays(cone, x)
    r, eta = _polar_arrays(cone, y)
    val, tail = wedge_kernel_polar(basis, t, rho, th, r, eta, with_tail=True)
    tail = float(tail)
    if tail > TAIL_WARN:
        warnings.warn(f"heat kernel series tail bound {tail:.2e} exceeds {TAIL_WARN:g}", SeriesTruncationWarning, stacklevel=2)
    return KernelValue(float(val), tail, tail > TAIL_WARN)


def _power(law: EntranceLaw) -> float:
    return law.alpha1 - (law.d / 2.0 - 1.0)


def leading_factors(law: EntranceLaw, x, t: float, y) -> tuple[float, float]:
    """Return ``(g(x), h(t, y))``, the leading factorisation of ``p^C(t, x, y)`` at the vertex."""
    cone = law.cone
    if not (t > 0):
        raise DomainError(f"t must be > 0, got {t}")
    x = _require_inside(cone, x, "x")
    y = _require_inside(cone, y, "y")
    rho, th = _polar_arrays(cone, x)
    r, eta = _polar_arrays(cone, y)
    a, k = law.alpha1, _power(law)
    g = rho**k * eigenfunction(law.basis, 1, th)
    log_h_pref = -(a * math.log(2.0) + log_gamma(a + 1.0) + (a + 1.0) * math.log(t))
    h = math.exp(log_h_pref) * r**k * math.exp(-r * r / (2.0 * t)) * eigenfunction(law.basis, 1, eta)
    return float(g), float(h)


def total_mass(law: EntranceLaw, t: float = 1.0) -> float:
    r"""Closed form of :math:`\int_C h(t, z)\,dz` (independent of ``t``)."""
    a, d = law.alpha1, law.d
    return (
        2.0 ** (-0.5 * a + (d - 2) / 4.0)
        * math.exp(log_gamma(0.5 * a + (d + 2) / 4.0) - log_gamma(a + 1.0))
        * law.basis.m1_integral
    )


def entrance_density_polar(law: EntranceLaw, t: float, r, angular):
    """Vectorised ``e(t, y)`` without the survival factor, in polar coordinates.

    This is the full density at ``t = 1``.
    """
    r = np.asarray(r, dtype=float)
    a, k = law.alpha1, _power(law)
    log_pref = math.log(law.c) - (a + 1.0) * math.log(t)
    with np.errstate(divide="ignore"):
        radial = np.exp(log_pref + k * np.log(r) - r * r / (2.0 * t))
    return radial * eigenfunction(law.basis, 1, angular)


def entrance_mass(law: EntranceLaw, r_max: float = 12.0, n_r: int = 96, n_ang: int = 64) -> float:
    r"""Integrate ``e(1, .)`` over the cone by tensor Gauss-Legendre in polar coordinates.

    Radial nodes on ``[0, r_max]`` (the Gaussian tail beyond 12 is below
    1e-30) and angular nodes over the cross-section with the cap measure
    ``|S^{d-2}| sin^{d-2}``.  This is an independent check of ``c``.
    """
    basis = law.basis
    r, wr = quadrature.gauss_legendre(0.0, r_max, n_r)
    jac_r = r ** (law.d - 1)
    if law.d == 1:
        return float(np.sum(wr * jac_r * entrance_density_polar(law, 1.0, r, 0.0)))
    top = basis.angular_max
    a, wa = quadrature.gauss_legendre(0.0, top, n_ang)
    if isinstance(law.cone, Wedge):
        jac_a = np.ones_like(a)
    else:
        jac_a = sphere_area(law.d - 2) * np.sin(a) ** (law.d - 2)
    vals = entrance_density_polar(law, 1.0, r[:, None], a[None, :])
    return float(np.einsum("i,j,ij->", wr * jac_r, wa * jac_a, vals))


def entrance_density(
    law: EntranceLaw,
    t: float,
    y,
    survival_mode: str | None = None,
    n: int = 100_000,
    dt: float = 1e-4,
    rng=None,
    return_stderr: bool = False,
):
    """Entrance density ``e(t, y)`` of the cone meander, ``t`` in ``(0, 1]``.

    At ``t = 1`` the survival factor is exactly one.  For ``t < 1`` the factor
    ``W_y(tau_C > 1 - t)`` comes from :func:`survival_probability` with the
    given ``survival_mode`` (default: cheapest exact method for the cone).
    With ``return_stderr`` the pair ``(value, stderr)`` is returned; the
    error is non-zero only for Monte Carlo survival.
    """
    if not (0.0 < t <= 1.0):
        raise DomainError(f"t must lie in (0, 1], got {t}")
    cone = law.cone
    y = _require_inside(cone, y, "y")
    r, ang = _polar_arrays(cone, y)
    base = float(entrance_density_polar(law, t, r, ang))
    if t == 1.0:
        return (base, 0.0) if return_stderr else base
    surv, se = survival_probability(cone, law.basis, y, 1.0 - t, mode=survival_mode, n=n, dt=dt, rng=rng)
    if return_stderr:
        return base * surv, base * se
    return base * surv


def _default_mode(cone: ConeSpec) -> str:
    if _is_flat(cone):
        return "closed_form"
    if isinstance(cone, Wedge):
        return "series"
    return "monte_carlo"


def _is_flat(cone: ConeSpec) -> bool:
    if isinstance(cone, HalfSpace):
        return True
    if isinstance(cone, Wedge):
        return cone.beta == math.pi
    return cone.theta0 == math.pi / 2


def _boundary_distance_flat(cone: ConeSpec, y: np.ndarray) -> float:
    if isinstance(cone, Wedge):
        return float(y[1])
    return float(y[0])


def _wedge_survival_series(basis: SpectralBasis, y: np.ndarray, s: float) -> float:
    beta = basis.cone.beta
    rho, th = _polar_arrays(basis.cone, y)
    rho_s = float(rho) / math.sqrt(s)
    # the radial integral scales out s: R_j = int_0^inf e^{-(u^2 + rho_s^2)/2} I_{a_j}(rho_s u) u du
    lo, hi = max(0.0, rho_s - 12.0), rho_s + 12.0
    m_max = rho_s * hi
    J_needed = math.ceil(beta / math.pi * (m_max + 10.0 * math.sqrt(m_max) + 30.0))
    if J_needed > basis.J:
        basis = wedge_spectrum(beta, J_needed)
    panels = max(4, int(math.ceil((hi - lo) / 2.0)))
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = quadrature.gauss_legendre(a, b, 48)
        nodes.append(x)
        weights.append(w)
    u = np.concatenate(nodes)
    w = np.concatenate(weights)
    gauss = -(u * u + rho_s * rho_s) / 2.0
    total = 0.0
    for j in range(1, basis.J + 1):
        if j % 2 == 0:
            continue  # int_0^beta m_j vanishes for even j
        m_int = math.sqrt(2.0 / beta) * 2.0 * beta / (j * math.pi)
        radial = float(np.dot(w, np.exp(log_bessel_i(basis.alphas[j - 1], rho_s * u) + gauss) * u))
        total += eigenfunction(basis, j, float(th)) * m_int * radial
    return min(max(total, 0.0), 1.0)


def survival_probability(
    cone: ConeSpec,
    basis: SpectralBasis | None,
    y,
    s: float,
    mode: str | None = None,
    n: int = 100_000,
    dt: float = 1e-4,
    rng=None,
    workers: int = 1,
) -> tuple[float, float]:
    """``W_y(tau_C > s)`` for Brownian motion started at ``y``.

    Modes
    -----
    ``series``
        Wedges only: the heat-kernel series integrated over the wedge
        (angular part in closed form, radial part by Gauss-Legendre).
    ``closed_form``
        Flat cones only (half-spaces, ``Wedge(pi)``, ``Circular3D(pi/2)``):
        ``2 Phi(a / sqrt(s)) - 1`` with ``a`` the distance to the boundary.
    ``monte_carlo``
        Fraction of ``n`` killed Brownian paths (step ``dt``) that survive;
        the binomial standard error is returned alongside.

    Returns
    -------
    tuple
        ``(estimate, stderr)``; ``stderr`` is 0 for the deterministic modes.
    """
    mode = mode or _default_mode(cone)
    if mode not in SURVIVAL_MODES:
        raise ConfigError(f"unknown survival mode {mode!r}; expected one of {SURVIVAL_MODES}")
    if not (s >= 0):
        raise DomainError(f"s must be >= 0, got {s}")
    y = _require_inside(cone, y, "y")
    if s == 0:
        return 1.0, 0.0
    if mode == "closed_form":
        if not _is_flat(cone):
            raise ConfigError(f"closed_form survival is only available for half-spaces, not {cone!r}")
        a = _boundary_distance_flat(cone, y)
        return float(math.erf(a / math.sqrt(2.0 * s))), 0.0
    if mode == "series":
        if not isinstance(cone, Wedge):
            raise ConfigError(f"series survival is only available for wedges, not {cone!r}")
        if basis is None or not isinstance(basis.cone, Wedge):
            basis = wedge_spectrum(cone.beta)
        return _wedge_survival_series(basis, y, s), 0.0
    from .sampler import killed_survival  # local import: sampler depends on this module

    return killed_survival(cone, y, s, n=n, dt=dt, rng=rng, workers=workers)


def meander_exit_survival(law: EntranceLaw, t: float) -> float:
    """Probability that the cone meander is still in the cone at time ``t >= 1``."""
    if not (t >= 1.0):
        raise DomainError(f"t must be >= 1, got {t}")
    return float(t ** (-0.5 * law.alpha1 + (law.d - 2) / 4.0))


def _radial_shape(law: EntranceLaw, alpha1: float | None = None) -> float:
    a = law.alpha1 if alpha1 is None else alpha1
    # radial density of e(1, .) is proportional to r^(a + d/2) e^{-r^2/2}
    return 0.5 * (a + law.d / 2.0 + 1.0)


def radial_pdf(law: EntranceLaw, r, alpha1: float | None = None):
    """Density of ``|X_1|`` under ``e(1, .)`` (closed form).

    ``alpha1`` overrides the exponent (used for negative controls).
    """
    k = _radial_shape(law, alpha1)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        logp = (2 * k - 1) * np.log(r) - r * r / 2.0 - (k - 1) * math.log(2.0) - log_gamma(k)
    return np.where(r > 0, np.exp(logp), 0.0)


def radial_cdf(law: EntranceLaw, r, alpha1: float | None = None):
    """CDF of ``|X_1|`` under ``e(1, .)``: ``|X_1|^2 / 2`` is Gamma-distributed."""
    k = _radial_shape(law, alpha1)
    r = np.maximum(np.asarray(r, dtype=float), 0.0)
    return _sp.gammainc(k, 0.5 * r * r)


def angular_cdf(law: EntranceLaw, angular):
    """CDF of the cap coordinate of ``X_1`` under ``e(1, .)``.

    The angular marginal is proportional to ``m_1`` times the cap measure.
    """
    basis = law.basis
    a = np.clip(np.asarray(angular, dtype=float), 0.0, basis.angular_max)
    cone = basis.cone
    if isinstance(cone, Wedge):
        return 0.5 * (1.0 - np.cos(math.pi * a / cone.beta))
    if basis.d == 1:
        return np.ones_like(a)
    if isinstance(cone, HalfSpace) and basis.d in (2, 3):
        # m_1 ~ cos(theta); d = 2 measure d theta (two sides), d = 3 measure sin(theta)
        return np.sin(a) if basis.d == 2 else np.sin(a) ** 2
    d = basis.d
    x, w = quadrature.gauss_legendre(0.0, 1.0, 64)
    flat = a.ravel()
    th = flat[:, None] * x[None, :]
    vals = eigenfunction(basis, 1, th) * np.sin(th) ** (d - 2)
    part = np.sum(vals * w[None, :], axis=1) * flat
    full = basis.m1_integral / sphere_area(d - 2)
    return (part / full).reshape(a.shape)
