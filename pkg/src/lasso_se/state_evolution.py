"""Scalar state evolution for the Lasso on Gaussian designs.

Given the empirical law of the signal (a finite list of weighted atoms),
the sampling ratio ``delta = n/N``, noise level ``sigma`` and penalty
``lam``, the pair ``(beta*, tau*)`` solves the two scalar equations

    tau^2 = sigma^2 + E[(eta(Theta + tau Z; alpha tau) - Theta)^2] / delta
    beta  = tau (1 - P(|Theta + tau Z| >= alpha tau) / delta),   alpha = lam / beta

and is also the saddle point of the max-min problem evaluated by
:func:`psi_value`.  The outer problem in ``beta`` is 1-strongly concave, so
we bisect on the sign of its derivative; the inner problem in ``tau`` is a
concave fixed point in ``tau^2``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize
from scipy.special import ndtri

from . import scalar_gaussian as sg
from .errors import ConvergenceError, DomainError, NoFixedPointError

INNER_TOL = 1e-12
OUTER_TOL = 1e-10
_BETA_EDGE = 1e-8


@dataclass(frozen=True, eq=False)
class AtomDistribution:
    """Finite signal law: atoms ``values`` with probabilities ``weights``."""

    values: np.ndarray
    weights: np.ndarray
    _moments: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float).ravel()
        w = np.ascontiguousarray(self.weights, dtype=float).ravel()
        if v.shape != w.shape or v.size == 0:
            raise DomainError("atoms and weights must be non-empty and of equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be non-negative and sum to 1")
        if not np.all(np.isfinite(v)):
            raise DomainError("atoms must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_vector(cls, theta):
        """Empirical law of the entries of ``theta`` (repeated values merged)."""
        theta = np.asarray(theta, dtype=float).ravel()
        vals, counts = np.unique(theta, return_counts=True)
        return cls(vals, counts / theta.size)

    @classmethod
    def point_mass(cls, value=0.0):
        return cls(np.array([value]), np.array([1.0]))

    @classmethod
    def sparse_gaussian(cls, s, n_atoms=2001, scale=1.0):
        """``s N(0, scale^2) + (1 - s) delta_0`` with the Gaussian part at midpoint quantiles."""
        if not 0.0 <= s <= 1.0:
            raise DomainError(f"s must lie in [0, 1], got {s}")
        q = scale * ndtri((np.arange(1, n_atoms + 1) - 0.5) / n_atoms)
        if s == 0.0:
            return cls.point_mass(0.0)
        if s == 1.0:
            return cls(q, np.full(n_atoms, 1.0 / n_atoms))
        w = np.concatenate(([1.0 - s], np.full(n_atoms, s / n_atoms)))
        w[0] = 1.0 - w[1:].sum()
        return cls(np.concatenate(([0.0], q)), w)

    def moment(self, p):
        """``E|Theta|^p``."""
        if p not in self._moments:
            self._moments[p] = float(np.dot(self.weights, np.abs(self.values) ** p))
        return self._moments[p]

    @property
    def second_moment(self):
        return self.moment(2)

    @property
    def abs_mean(self):
        return self.moment(1)

    def sample(self, n, rng):
        return rng.choice(self.values, size=n, p=self.weights)


@dataclass(frozen=True)
class SEFixedPoint:
    """Solution of the state-evolution system and the predictions derived from it."""

    beta_star: float
    tau_star: float
    alpha_star: float
    s_star: float
    lam: float
    delta: float
    sigma: float
    psi_value: float
    r_star: float
    p_star: float
    kappa_star: float

    @property
    def threshold(self):
        """Effective soft threshold ``alpha* tau*`` of the equivalent denoiser."""
        return self.alpha_star * self.tau_star


class Predictions(NamedTuple):
    r_star: float
    p_star: float
    s_star: float
    beta_sq: float
    kappa_star: float
    tau_star: float


def expect_mse(dist, tau, alpha):
    """``E[(eta(Theta + tau Z; alpha tau) - Theta)^2]`` over ``dist`` and ``Z``."""
    if tau <= 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    return tau * tau * float(np.dot(dist.weights, sg.atom_mse(dist.values / tau, alpha)))


def expect_active(dist, tau, alpha):
    """``P(|Theta + tau Z| >= alpha tau)``."""
    return float(np.dot(dist.weights, sg.atom_active_prob(dist.values / tau, alpha)))


def _check_common(delta, sigma):
    if delta <= 0:
        raise DomainError(f"delta must be > 0, got {delta}")
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")


def solve_tau(dist, delta, sigma, alpha, t0=None, max_iter=500):
    """Unique ``tau`` with ``tau^2 = sigma^2 + expect_mse(dist, tau, alpha) / delta``.

    Fixed-point iteration on ``t = tau^2`` (damped by 1/2 once it starts to
    oscillate), falling back to a bracketed root search.  ``t0`` is an
    optional starting value, e.g. the previous solution along a path.
    """
    _check_common(delta, sigma)
    amin = sg.alpha_min_ext(delta)
    if delta < 1.0 and alpha <= amin + 1e-9:
        raise NoFixedPointError(
            f"alpha={alpha:.6g} does not exceed alpha_min({delta})={amin:.6g}"
        )
    s2 = sigma * sigma

    def F(t):
        return s2 + expect_mse(dist, np.sqrt(t), alpha) / delta

    t = 2.0 * s2 + dist.second_moment / delta if t0 is None else max(float(t0), s2)
    damping = 1.0
    prev_step = 0.0
    # a slowly contracting map is handed to the bracketing solver early
    for it in range(max_iter):
        ft = F(t)
        step = ft - t
        if abs(step) <= INNER_TOL * t:
            return float(np.sqrt(ft))
        if it > 0 and step * prev_step < 0:
            damping = 0.5
        elif it > 20 and prev_step != 0.0 and abs(step / prev_step) > 0.9:
            break
        prev_step = step
        t = t + damping * step

    def g(t):
        return F(t) - t

    lo = s2
    hi = max(t, 2.0 * s2)
    while g(hi) > 0:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise NoFixedPointError(f"no fixed point found for alpha={alpha:.6g}")
    t = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=1000)
    if abs(g(t)) > INNER_TOL * t:
        # brentq stops on bracket width; polish once with the map itself
        t = F(t)
    return float(np.sqrt(t))


def psi_value(dist, delta, sigma, lam, beta, tau):
    """Objective of the scalar max-min problem at ``(beta, tau)``."""
    if beta < 0 or tau < sigma:
        raise DomainError("need beta >= 0 and tau >= sigma")
    if beta == 0:
        return -lam / delta * dist.abs_mean
    alpha = lam / beta
    inner = tau * beta * float(np.dot(dist.weights, sg.delta_alpha(dist.values / tau, alpha)))
    inner -= 0.5 * beta * tau
    return (sigma * sigma / tau + tau) * beta / 2.0 - 0.5 * beta * beta + inner / delta


class _OuterProblem:
    """Derivative of ``Psi(beta) = min_tau psi(beta, tau)`` with a warm-started inner solve."""

    def __init__(self, dist, delta, sigma, lam):
        self.dist, self.delta, self.sigma, self.lam = dist, delta, sigma, lam
        self.amin = sg.alpha_min_ext(delta)
        self._t_hint = None

    def __call__(self, beta):
        alpha = self.lam / beta
        if self.delta < 1.0 and alpha <= self.amin + 1e-9:
            return -np.inf, np.inf, 1.0
        try:
            tau = solve_tau(self.dist, self.delta, self.sigma, alpha, t0=self._t_hint)
        except NoFixedPointError:
            return -np.inf, np.inf, 1.0
        s = expect_active(self.dist, tau, alpha)
        self._t_hint = tau * tau
        return tau * (1.0 - s / self.delta) - beta, tau, s


def _full_bracket(outer, dist, sigma, lam, delta):
    lo = _BETA_EDGE
    if delta < 1.0:
        hi = lam / outer.amin - _BETA_EDGE
    else:
        hi = 10.0 * (sigma + np.sqrt(dist.second_moment))
        while outer(hi)[0] > 0:
            hi *= 2.0
    return lo, hi


def solve_fixed_point(dist, delta, sigma, lam, bracket=None, max_bisect=200):
    """Solve the state-evolution system at penalty ``lam``.

    ``bracket`` optionally narrows the initial ``beta`` interval; it is
    discarded if the derivative does not change sign across it.
    """
    _check_common(delta, sigma)
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    outer = _OuterProblem(dist, delta, sigma, lam)
    full = _full_bracket(outer, dist, sigma, lam, delta)
    lo, hi = full
    if bracket is not None:
        blo, bhi = max(bracket[0], full[0]), min(bracket[1], full[1])
        if blo < bhi and outer(blo)[0] > 0 and outer(bhi)[0] < 0:
            lo, hi = blo, bhi
    if not outer(lo)[0] > 0:
        raise ConvergenceError("Psi' is not positive at the lower bracket", lam=lam, beta=lo)

    for it in range(max_bisect):
        mid = 0.5 * (lo + hi)
        d, _, _ = outer(mid)
        if d == 0.0:
            lo = hi = mid
            break
        if d > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 2 * np.finfo(float).eps * hi:
            break
    else:
        raise ConvergenceError(
            "outer bisection did not converge", lam=lam, bracket=(lo, hi), iterations=max_bisect
        )

    beta = 0.5 * (lo + hi)
    d, tau, s = outer(beta)
    if not np.isfinite(tau):
        raise ConvergenceError("fixed point sits on the edge of the admissible region", lam=lam, beta=beta)
    return _assemble(dist, delta, sigma, lam, beta, tau, s)


def _assemble(dist, delta, sigma, lam, beta, tau, s):
    beta, tau, s, lam = float(beta), float(tau), float(s), float(lam)
    alpha = lam / beta
    s2 = sigma * sigma
    return SEFixedPoint(
        beta_star=beta,
        tau_star=tau,
        alpha_star=alpha,
        s_star=s,
        lam=lam,
        delta=delta,
        sigma=sigma,
        psi_value=float(psi_value(dist, delta, sigma, lam, beta, tau)),
        r_star=delta * (tau * tau - s2),
        # In-sample error = residual - noise + twice the noise/fit covariance,
        # the last being sigma^2 df / n with df/n -> s/delta.
        p_star=beta * beta - s2 + 2.0 * s2 / delta * s,
        kappa_star=(beta / lam) ** 2 * (1.0 + delta - 2.0 * s - delta * s2 / (tau * tau)),
    )


def residuals(dist, fp):
    """Residuals of both state-evolution equations at ``fp`` (natural units)."""
    tau, alpha = fp.tau_star, fp.alpha_star
    r1 = tau * tau - fp.sigma ** 2 - expect_mse(dist, tau, alpha) / fp.delta
    r2 = fp.beta_star - tau * (1.0 - expect_active(dist, tau, alpha) / fp.delta)
    return r1, r2


def predictions(fp):
    """Asymptotic risk, prediction error, sparsity, residual, subgradient norm and tau."""
    return Predictions(fp.r_star, fp.p_star, fp.s_star, fp.beta_star ** 2, fp.kappa_star, fp.tau_star)


def se_path(dist, delta, sigma, lambda_grid):
    """Fixed points along a monotone grid, warm-started with the Lipschitz bound on ``beta*``.

    The grid is walked in the order given, so a descending grid works too.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    steps = np.diff(grid)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("lambda grid must be non-empty, positive and strictly monotone")
    amin = sg.alpha_min_ext(delta)
    out = []
    prev = None
    for lam in grid:
        bracket = None
        if prev is not None and amin > 0:
            width = 2.0 / amin * abs(lam - prev.lam) + 1e-6
            bracket = (prev.beta_star - width, prev.beta_star + width)
        try:
            fp = solve_fixed_point(dist, delta, sigma, lam, bracket=bracket)
        except ConvergenceError as exc:
            exc.diagnostics["lambda"] = lam
            raise
        out.append(fp)
        prev = fp
    return out


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def mu_star_cloud(theta, z, fp):
    """Points ``(eta(Theta + tau* Z; alpha* tau*), Theta)`` for given atoms and noise."""
    return np.column_stack((sg.soft_threshold(theta + fp.tau_star * z, fp.threshold), theta))


def mu_debiased_cloud(theta, z, fp):
    """Points ``(Theta + tau* Z, Theta)``."""
    return np.column_stack((theta + fp.tau_star * z, theta))


def nu_star_cloud(theta, z, fp):
    """Points ``(clip(Theta + tau* Z, +-t) / t, Theta)`` with ``t = alpha* tau*``.

    This is ``-(eta(u; t) - u) / t`` written so that active coordinates land
    exactly on +-1.
    """
    t = fp.threshold
    u = theta + fp.tau_star * z
    return np.column_stack((np.clip(u, -t, t) / t, theta))


def sample_mu_star(dist, fp, n_samples, seed=None):
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    rng = _rng(seed)
    theta = dist.sample(n_samples, rng)
    return mu_star_cloud(theta, rng.standard_normal(n_samples), fp)


def sample_mu_debiased(dist, fp, n_samples, seed=None):
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    rng = _rng(seed)
    theta = dist.sample(n_samples, rng)
    return mu_debiased_cloud(theta, rng.standard_normal(n_samples), fp)


def sample_nu_star(dist, fp, n_samples, seed=None):
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    rng = _rng(seed)
    theta = dist.sample(n_samples, rng)
    return nu_star_cloud(theta, rng.standard_normal(n_samples), fp)
