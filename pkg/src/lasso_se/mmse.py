"""Bayes-optimal benchmark for the sparse Gaussian prior.

The prior is ``s N(0, 1) + (1 - s) delta_0``.  The asymptotic minimum mean
squared error over all estimators is ``delta * sigma^2 * m`` where ``m``
minimises a one-dimensional potential built from the mutual information of
the scalar channel ``sqrt(r) Theta + Z``.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError

_LOG_2PI = np.log(2.0 * np.pi)


class MmseAmbiguityWarning(RuntimeWarning):
    """Two local minima of the potential are numerically tied."""


@dataclass(frozen=True)
class MmsePrior:
    s: float

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise DomainError(f"s must lie in [0, 1], got {self.s}")

    @property
    def second_moment(self):
        return self.s


def _log_ratio(y, r, s):
    # log of p(y) / phi(y) for the channel output density p
    a = 0.5 * y * y * r / (1.0 + r) - 0.5 * np.log1p(r)
    if s == 0.0:
        return np.zeros_like(y)
    if s == 1.0:
        return a
    return np.logaddexp(np.log1p(-s), np.log(s) + a)


def _density(y, r, s):
    v = 1.0 + r
    g1 = np.exp(-0.5 * y * y / v - 0.5 * (_LOG_2PI + np.log(v)))
    g0 = np.exp(-0.5 * y * y - 0.5 * _LOG_2PI)
    return s * g1 + (1.0 - s) * g0


def mutual_info(r, prior):
    """``I(Theta; sqrt(r) Theta + Z)`` in nats.

    Equal to ``h(Y) - log(2 pi e) / 2``.  Numerically it is evaluated as
    ``s r / 2 - KL(p || phi)``, since the second moments of ``Y`` and of a
    standard Gaussian differ by exactly ``s r``.  The KL integral is done
    by adaptive quadrature over ``|y| <= 12 sqrt(1 + r)``, beyond which the
    integrand is below double precision.
    """
    r = float(r)
    if r < 0:
        raise DomainError(f"snr must be >= 0, got {r}")
    s = prior.s
    if r == 0.0 or s == 0.0:
        return 0.0
    half = 12.0 * np.sqrt(1.0 + r)

    def integrand(y):
        return _density(y, r, s) * _log_ratio(y, r, s)

    # the integrand is even; the knee sits near |y| ~ sqrt(1 + r)
    kl, _ = integrate.quad(integrand, 0.0, half, points=[1.0, np.sqrt(1.0 + r)],
                           epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(max(0.5 * s * r - 2.0 * kl, 0.0))


def psi_mmse(m, delta, sigma, prior):
    """Potential whose minimiser gives the MMSE: ``I(sigma^-2 / (1+m)) + (delta/2)(log(1+m) - m/(1+m))``."""
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    snr = 1.0 / (sigma * sigma * (1.0 + m))
    return mutual_info(snr, prior) + 0.5 * delta * (np.log1p(m) - m / (1.0 + m))


def _default_cap(sigma, prior):
    return 10.0 * (prior.second_moment + sigma * sigma) / (sigma * sigma)


def mmse_minimizer(delta, sigma, prior, m_cap=None, grid_points=801, tie_tol=1e-9):
    """Global minimiser of ``psi_mmse`` over ``[0, m_cap]``.

    A coarse grid (uniform in ``log(1+m)``) brackets every local minimum;
    each is polished with a bounded scalar search.  If the runner-up is
    within ``tie_tol`` of the best value an ``MmseAmbiguityWarning`` is
    issued and the smaller ``m`` is returned.
    """
    if delta <= 0:
        raise DomainError(f"delta must be > 0, got {delta}")
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    cap = _default_cap(sigma, prior) if m_cap is None else float(m_cap)
    grid = np.expm1(np.linspace(0.0, np.log1p(cap), grid_points))
    vals = np.array([psi_mmse(m, delta, sigma, prior) for m in grid])

    def f(m):
        return psi_mmse(m, delta, sigma, prior)

    minima = []
    for i in range(grid_points):
        left = vals[i - 1] if i > 0 else np.inf
        right = vals[i + 1] if i < grid_points - 1 else np.inf
        if vals[i] <= left and vals[i] <= right:
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
            if hi > lo:
                res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                               options={"xatol": 1e-12 * max(1.0, hi)})
                m_best, v_best = (res.x, res.fun) if res.fun < vals[i] else (grid[i], vals[i])
            else:
                m_best, v_best = grid[i], vals[i]
            minima.append((float(v_best), float(m_best)))
    minima.sort()
    if len(minima) > 1 and minima[1][0] - minima[0][0] <= tie_tol:
        warnings.warn(
            f"potential has near-tied minima at m={minima[0][1]:.6g} and m={minima[1][1]:.6g}",
            MmseAmbiguityWarning, stacklevel=2,
        )
        return min(minima[0][1], minima[1][1])
    return minima[0][1]


def mmse_limit(delta, sigma, prior, **kw):
    """Asymptotic Bayes risk per coordinate, ``delta * sigma^2 * m*``."""
    return float(delta * sigma * sigma * mmse_minimizer(delta, sigma, prior, **kw))
