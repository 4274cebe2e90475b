r"""Special functions: modified Bessel :math:`I_\nu`, log-gamma and the
Legendre function :math:`P_\nu` of real degree.

All evaluators accept scalars or numpy arrays for the argument ``x`` and
return a float (scalar input) or an ndarray (array input).

The Bessel function is summed from its power series

.. math::
    I_\nu(x) = \sum_{m\ge 0} \frac{(x/2)^{\nu+2m}}{m!\,\Gamma(\nu+m+1)}

in log space, so orders around 100 and arguments of a few hundred neither
overflow nor underflow.  The Legendre function is the terminating or
convergent hypergeometric series

.. math::
    P_\nu(x) = {}_2F_1\left(-\nu, \nu+1; 1; \tfrac{1-x}{2}\right),

which converges for :math:`x > -1`; the number of terms needed grows without
bound as :math:`x \to -1`, so ``max_terms`` effectively excludes a
neighbourhood of :math:`-1` (roughly :math:`x < -0.95` at the defaults).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import ConvergenceError, DomainError

__all__ = [
    "SeriesControl",
    "DEFAULT_CONTROL",
    "bessel_i",
    "log_bessel_i",
    "log_gamma",
    "legendre_p",
]


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for the power series in this module."""

    rel_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if not (self.rel_tol > 0):
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms}")


DEFAULT_CONTROL = SeriesControl()


def _unwrap(arr, scalar):
    return float(arr) if scalar else arr


def log_gamma(x):
    """Natural logarithm of the gamma function for ``x > 0``.

    Scalars go through :func:`math.lgamma`, arrays through
    :func:`scipy.special.gammaln`.
    """
    if np.ndim(x) == 0:
        xf = float(x)
        if not math.isfinite(xf) or xf <= 0:
            raise DomainError(f"log_gamma requires finite x > 0, got {x!r}")
        return math.lgamma(xf)
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)) or np.any(xa <= 0):
        raise DomainError("log_gamma requires finite x > 0")
    return _sp.gammaln(xa)


def log_bessel_i(nu, x, ctl: SeriesControl = DEFAULT_CONTROL):
    r"""Return :math:`\log I_\nu(x)` for ``nu >= 0`` and ``x >= 0``.

    ``-inf`` is returned where :math:`I_\nu(x) = 0` (``x = 0`` and ``nu > 0``).

    Raises
    ------
    DomainError
        Non-finite or negative inputs.
    ConvergenceError
        The series did not meet ``ctl.rel_tol`` within ``ctl.max_terms``.
    """
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise DomainError(f"bessel order must be finite and >= 0, got {nu!r}")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xa)) or np.any(xa < 0):
        raise DomainError("bessel argument must be finite and >= 0")

    out = np.empty_like(xa)
    zero = xa == 0.0
    out[zero] = 0.0 if nu == 0.0 else -np.inf
    pos = ~zero
    if np.any(pos):
        xp = xa[pos]
        q = 0.25 * xp * xp
        log_q = np.log(q)
        log_tol = math.log(ctl.rel_tol)
        log_term = np.zeros_like(xp)  # term m relative to the m = 0 term
        log_sum = np.zeros_like(xp)
        done = np.zeros(xp.shape, dtype=bool)
        for m in range(ctl.max_terms):
            ratio_log = log_q - math.log((m + 1) * (nu + m + 1))
            log_term = log_term + ratio_log
            # once the terms decrease the tail is dominated by a geometric series
            with np.errstate(divide="ignore", invalid="ignore"):
                log_tail = log_term - np.log1p(-np.exp(np.minimum(ratio_log, 0.0)))
            done |= (ratio_log < 0) & (log_tail - log_sum <= log_tol)
            if done.all():
                break
            log_sum = np.where(done, log_sum, np.logaddexp(log_sum, log_term))
        else:
            raise ConvergenceError(
                f"bessel_i series for nu={nu} did not converge in {ctl.max_terms} terms "
                f"(max x = {xp.max():.6g})"
            )
        out[pos] = nu * np.log(0.5 * xp) - math.lgamma(nu + 1.0) + log_sum
    return _unwrap(out[0], True) if scalar else out


def bessel_i(nu, x, ctl: SeriesControl = DEFAULT_CONTROL):
    r"""Modified Bessel function of the first kind :math:`I_\nu(x)`.

    Parameters
    ----------
    nu : float
        Order, ``nu >= 0``.
    x : float or array_like
        Argument, ``x >= 0``.  Relative accuracy ``ctl.rel_tol`` is kept for
        ``x <= 50``; larger arguments work but need more terms.
    ctl : SeriesControl, optional
        Series truncation control.

    Returns
    -------
    float or ndarray
        Non-negative value(s) of :math:`I_\nu(x)`.
    """
    val = np.exp(log_bessel_i(nu, x, ctl))
    return float(val) if np.ndim(val) == 0 else val


def legendre_p(nu, x, ctl: SeriesControl = DEFAULT_CONTROL):
    r"""Legendre function of the first kind :math:`P_\nu(x)`, real ``nu >= 0``.

    Summed from the hypergeometric series in ``z = (1 - x) / 2``; integer
    degrees use the parity ``P_n(-x) = (-1)^n P_n(x)`` for ``x < 0``.  Truncation
    happens once the geometric bound on the remaining terms is below
    ``ctl.rel_tol * max(|partial sum|, 1)``; the absolute floor keeps the
    criterion usable at zeros of :math:`P_\nu`.  For large ``nu * sqrt(z)``
    the terms grow before they shrink and rounding (about ``eps`` times the
    largest term) dominates; a :class:`ConvergenceError` is raised when that
    rounding exceeds ``sqrt(ctl.rel_tol)``.

    Raises
    ------
    DomainError
        ``nu < 0``, ``x`` outside ``[-1, 1]`` or non-finite input.
    ConvergenceError
        Not converged within ``ctl.max_terms`` (happens close to ``x = -1``).
    """
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise DomainError(f"legendre degree must be finite and >= 0, got {nu!r}")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xa)) or np.any(np.abs(xa) > 1.0):
        raise DomainError("legendre argument must lie in [-1, 1]")
    sign = np.ones_like(xa)
    if nu.is_integer():
        # polynomial case: use parity, the series is far better conditioned for x >= 0
        sign = np.where(xa < 0, (-1.0) ** int(nu), 1.0)
        xa = np.abs(xa)
    z = 0.5 * (1.0 - xa)
    term = np.ones_like(xa)
    total = np.ones_like(xa)
    biggest = np.ones_like(xa)
    done = z == 0.0
    for k in range(ctl.max_terms):
        factor = (k - nu) * (k + nu + 1.0) / ((k + 1.0) ** 2)
        term = term * factor * z
        total = np.where(done, total, total + term)
        biggest = np.where(done, biggest, np.maximum(biggest, np.abs(term)))
        if factor == 0.0:
            break
        # for k + 1 > nu the ratio of successive terms increases towards z
        if k + 1 > nu:
            with np.errstate(divide="ignore"):
                tail = np.abs(term) * z / (1.0 - z)
        else:
            tail = np.full_like(z, np.inf)
        done |= tail <= ctl.rel_tol * np.maximum(np.abs(total), 1.0)
        if done.all():
            break
    else:
        raise ConvergenceError(
            f"legendre_p series for nu={nu} did not converge in {ctl.max_terms} terms "
            f"(min x = {xa.min():.6g}); the series converges slowly near x = -1"
        )
    # rounding error is about eps * largest term; refuse when it swamps the value
    lost = biggest * np.finfo(float).eps > math.sqrt(ctl.rel_tol) * np.maximum(np.abs(total), 1.0)
    if np.any(lost):
        raise ConvergenceError(
            f"legendre_p series for nu={nu} lost all precision to cancellation "
            f"(largest term {biggest.max():.3g})"
        )
    total = total * sign
    return _unwrap(total[0], True) if scalar else total
