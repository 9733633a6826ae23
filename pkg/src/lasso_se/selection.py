"""Rules for picking the regularization level.

Three rules are data driven and minimise a criterion over a grid (the
estimated effective noise, SURE, or the cross-validated risk).  Two are
fixed formulas: the universal threshold ``sigma sqrt(2 log N)`` and the
minimax choice for a nominal sparsity.
"""

from dataclasses import dataclass

import numpy as np

from . import estimators, lasso
from .errors import ConfigError, DomainError
from .scalar_gaussian import lambda_minimax

RULES = ("EST", "SURE", "CV", "THEORY", "MINIMAX")


@dataclass(frozen=True, eq=False)
class SelectionResult:
    rule: str
    lambda_selected: float
    criterion_curve: np.ndarray | None = None
    index: int | None = None
    achieved_risk: float | None = None


def theory_lambda(sigma, N):
    """The universal threshold ``sigma * sqrt(2 log N)``."""
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    if sigma <= 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    return float(sigma * np.sqrt(2.0 * np.log(N)))


def minimax_lambda(s0, delta, sigma):
    return lambda_minimax(s0, delta, sigma)


def default_grid(sigma, N, size=40):
    """Geometric grid from ``0.1 sigma`` to twice the universal threshold."""
    return np.geomspace(0.1 * sigma, 2.0 * theory_lambda(sigma, N), size)


def argmin_smallest(curve):
    """Index of the minimum of ``curve``; ties resolve to the first entry.

    NaN entries never win.
    """
    c = np.asarray(curve, dtype=float)
    c = np.where(np.isnan(c), np.inf, c)
    if not np.isfinite(c).any():
        raise DomainError("criterion curve has no finite value")
    return int(np.flatnonzero(c == c.min())[0])


def _risk(fit, theta_star):
    if theta_star is None:
        return None
    d = fit.theta_hat - theta_star
    return float(np.dot(d, d) / d.size)


def select(rule, problem, lambda_grid, *, fits=None, sigma=None, folds=4, rng=0,
           theta_star=None, s0=None, delta=None, curve=None):
    """Apply one selection rule.

    ``lambda_grid`` must be ascending.  ``fits`` (ascending, one per grid
    point) may be passed to reuse an existing path.  For SURE, a given
    ``sigma`` means the true noise level is used; ``None`` plugs in the
    per-lambda noise estimate.  ``curve`` skips criterion evaluation
    entirely (for CV curves computed elsewhere).  With ``theta_star`` the
    risk achieved at the selected level is attached.
    """
    rule = rule.upper()
    if rule not in RULES:
        raise ConfigError(f"unknown rule {rule!r}; expected one of {', '.join(RULES)}")
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise DomainError("lambda grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("lambda grid must be strictly ascending")

    if rule in ("THEORY", "MINIMAX"):
        if rule == "THEORY":
            if sigma is None:
                raise ConfigError("THEORY rule needs sigma")
            lam = theory_lambda(sigma, problem.N)
        else:
            if s0 is None or sigma is None:
                raise ConfigError("MINIMAX rule needs s0 and sigma")
            lam = minimax_lambda(s0, problem.n / problem.N if delta is None else delta, sigma)
        risk = None
        if theta_star is not None:
            risk = _risk(lasso.fit(problem, lam), theta_star)
        return SelectionResult(rule, lam, achieved_risk=risk)

    if curve is None:
        if rule == "CV":
            curve = estimators.cv_risk(problem, grid, folds, rng)
        else:
            if fits is None:
                fits = lasso.path(problem, grid)
            if rule == "EST":
                curve = [estimators.tau_hat(f, problem) for f in fits]
            else:
                curve = [estimators.sure(f, problem, sigma * sigma if sigma is not None
                                         else max(estimators.sigma_hat_sq(f, problem), 0.0))
                         for f in fits]
    curve = np.asarray(curve, dtype=float)
    if curve.shape != grid.shape:
        raise DomainError("criterion curve and grid differ in length")
    i = argmin_smallest(curve)
    risk = None
    if theta_star is not None:
        f = fits[i] if fits is not None else lasso.fit(problem, grid[i])
        risk = _risk(f, theta_star)
    return SelectionResult(rule, float(grid[i]), curve, i, risk)
