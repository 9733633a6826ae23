"""Closed-form scalar functions of a standard Gaussian.

Everything here is an expectation over ``Z ~ N(0, 1)`` written out in terms
of the density ``phi`` and distribution function ``Phi``.  The functions
accept scalars or numpy arrays and broadcast like ufuncs.

Even functions of ``x`` are evaluated at ``|x|`` and rearranged so that no
two tail masses of order one are subtracted from each other.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import ndtr

from .errors import DomainError, InfeasibleError

_INV_SQRT_2PI = 0.3989422804014327


@dataclass(frozen=True)
class ScalarParams:
    """Bundle of the dimensionless scalars used by the closed forms.

    ``alpha`` is a threshold-to-noise ratio, ``x`` a signal-to-noise ratio,
    ``delta`` the sampling ratio n/N and ``s`` a sparsity fraction.
    """

    alpha: float = 0.0
    x: float = 0.0
    delta: float = 1.0
    s: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if self.delta <= 0:
            raise DomainError(f"delta must be > 0, got {self.delta}")
        if not 0.0 <= self.s <= 1.0:
            raise DomainError(f"s must lie in [0, 1], got {self.s}")


def soft_threshold(x, b):
    """Soft thresholding ``eta(x; b) = sign(x) (|x| - b)_+``.

    Returns an exact zero whenever ``|x| <= b``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.asarray(b) < 0):
        raise DomainError("threshold must be non-negative")
    return np.sign(x) * np.maximum(np.abs(x) - b, 0.0)


def gauss_pdf(x):
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def gauss_cdf(x):
    return ndtr(x)


def gauss_phi_Phi(x):
    """Return the pair ``(phi(x), Phi(x))``."""
    return gauss_pdf(x), gauss_cdf(x)


def _check_alpha(alpha):
    if np.any(np.asarray(alpha) < 0):
        raise DomainError("alpha must be non-negative")


def atom_mse(x, alpha):
    """``E[(eta(x + Z; alpha) - x)^2]`` for a single atom at ``x``.

    Split by the three branches of the soft threshold: above, below and
    inside the dead zone.
    """
    _check_alpha(alpha)
    a = np.abs(np.asarray(x, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    upper = gauss_cdf(a - alpha)
    lower = gauss_cdf(-a - alpha)
    dead = gauss_cdf(alpha - a) - lower
    out = ((1.0 + alpha * alpha) * (upper + lower)
           - (alpha + a) * gauss_pdf(alpha - a)
           + (a - alpha) * gauss_pdf(alpha + a)
           + a * a * dead)
    return np.maximum(out, 0.0)


def atom_active_prob(x, alpha):
    """``P(|x + Z| >= alpha) = Phi(x - alpha) + Phi(-x - alpha)``."""
    _check_alpha(alpha)
    a = np.abs(np.asarray(x, dtype=float))
    return gauss_cdf(a - alpha) + gauss_cdf(-a - alpha)


def _second_tail(t):
    # E[(t + Z)_+^2]
    return (t * t + 1.0) * gauss_cdf(t) + t * gauss_pdf(t)


def _first_tail(t):
    # E[(t + Z)_+]
    return t * gauss_cdf(t) + gauss_pdf(t)


def delta_alpha(x, alpha):
    """``E[l_alpha(x + Z)] - alpha |x|`` where ``l_alpha`` is the scalar Lasso value.

    ``l_alpha(y) = min_u (y - u)^2 / 2 + alpha |u|``.
    """
    _check_alpha(alpha)
    a = np.abs(np.asarray(x, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    return -0.5 * alpha * alpha + 0.5 * (_second_tail(alpha - a) - _second_tail(-a - alpha))


def h_alpha(x, alpha):
    """``E|eta(x + Z; alpha)| - |x|``."""
    _check_alpha(alpha)
    a = np.abs(np.asarray(x, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    return -alpha + _first_tail(alpha - a) + _first_tail(-a - alpha)


def _tail_mse(alpha):
    # (1 + a^2) Phi(-a) - a phi(a): half the MSE of thresholding pure noise
    return (1.0 + alpha * alpha) * gauss_cdf(-alpha) - alpha * gauss_pdf(alpha)


def m_s(alpha, s):
    """Worst-case soft-threshold MSE over s-sparse signals, with two derivatives in alpha."""
    _check_alpha(alpha)
    if np.any(np.asarray(s) < 0) or np.any(np.asarray(s) > 1):
        raise DomainError("s must lie in [0, 1]")
    alpha = np.asarray(alpha, dtype=float)
    tail = gauss_cdf(-alpha)
    value = s * (1.0 + alpha * alpha) + 2.0 * (1.0 - s) * _tail_mse(alpha)
    d1 = 2.0 * (alpha * s + 2.0 * (1.0 - s) * (alpha * tail - gauss_pdf(alpha)))
    d2 = 2.0 * (s + 2.0 * (1.0 - s) * tail)
    return value, d1, d2


def alpha_min(delta):
    """Smallest admissible threshold ratio: root of ``(1+a^2) Phi(-a) - a phi(a) = delta/2``.

    Only defined for ``0 < delta <= 1``; callers with ``delta >= 1`` use 0.
    """
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"alpha_min needs 0 < delta <= 1, got {delta}")
    if delta == 1.0:
        return 0.0
    target = 0.5 * delta

    def f(a):
        return float(_tail_mse(a)) - target

    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
    root = optimize.bisect(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(root)


def alpha_min_ext(delta):
    """``alpha_min`` extended by 0 for ``delta >= 1``."""
    if delta <= 0:
        raise DomainError(f"delta must be > 0, got {delta}")
    return 0.0 if delta >= 1.0 else alpha_min(delta)


def _critical_ratio(alpha, delta):
    g = _tail_mse(alpha)
    return (1.0 - 2.0 * g / delta) / (1.0 + alpha * alpha - 2.0 * g)


def s_max(delta, grid_points=2001):
    """Critical sparsity: the Donoho-Tanner threshold in terms of sparsity fraction."""
    if delta <= 0:
        raise DomainError(f"delta must be > 0, got {delta}")
    if delta >= 1.0:
        return 1.0
    grid = np.linspace(1e-6, 20.0, grid_points)
    vals = _critical_ratio(grid, delta)
    i = int(np.argmax(vals))
    if 0 < i < grid_points - 1:
        res = optimize.minimize_scalar(
            lambda a: -float(_critical_ratio(a, delta)),
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            tol=1e-10,
        )
        best = max(-res.fun, vals[i])
    else:
        best = vals[i]
    return float(delta * best)


def minimax_alpha(s0):
    """Unique minimiser of ``M_s0`` on ``[0, inf)``."""
    if not 0.0 < s0 <= 1.0:
        raise InfeasibleError(f"M_s has no finite positive minimiser for s0={s0}")
    if s0 == 1.0:
        return 0.0

    def d1(a):
        return float(m_s(a, s0)[1])

    hi = 1.0
    while d1(hi) < 0:
        hi *= 2.0
    return float(optimize.brentq(d1, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def lambda_minimax(s0, delta, sigma):
    """Minimax regularization over ``s0``-sparse vectors (in the Lasso's units)."""
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if delta <= 0:
        raise DomainError(f"delta must be > 0, got {delta}")
    a0 = minimax_alpha(s0)
    worst = float(m_s(a0, s0)[0])
    if worst >= delta:
        raise InfeasibleError(
            f"s0={s0} is outside the stable region at delta={delta} (M={worst:.6g} >= delta)"
        )
    lam = a0 * sigma * np.sqrt(1.0 - worst / delta)
    if lam <= 0:
        raise InfeasibleError(f"minimax lambda degenerates to 0 at s0={s0}")
    return float(lam)
