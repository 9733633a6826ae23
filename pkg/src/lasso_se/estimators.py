"""Data-driven estimates of the effective noise, the risk, the noise level,
the prediction error, and the k-fold cross-validation risk.

Everything except ``cv_risk`` is a function of a single fit and its
problem, so recomputing gives bit-identical numbers.
"""

from dataclasses import dataclass

import numpy as np

from . import lasso
from .errors import ConfigError, DegenerateError, DomainError, NumericError

SIGMA_SOURCES = ("true", "estimated")


@dataclass(frozen=True)
class EstimatorReport:
    lam: float
    tau_hat: float
    r_hat: float
    sigma_hat_sq: float
    sure: float
    sure_sigma_source: str
    support_frac: float
    cv_risk: float | None = None


def _free_fraction(fit, problem):
    k = fit.support_size
    if k >= problem.n:
        raise DegenerateError(f"support size {k} >= n={problem.n}: estimator undefined")
    return 1.0 - k / problem.n


def tau_hat(fit, problem):
    """``sqrt(n) ||y - X theta_hat|| / (n - ||theta_hat||_0)``."""
    _free_fraction(fit, problem)
    n = problem.n
    return float(np.sqrt(n) * np.linalg.norm(fit.residual) / (n - fit.support_size))


def _corr_sq(fit, problem):
    g = problem.X.T @ fit.residual
    return float(np.dot(g, g))


def r_hat(fit, problem):
    """Estimate of ``||theta_hat - theta*||^2 / N``; reported raw, it can dip below 0."""
    free = _free_fraction(fit, problem)
    N = problem.N
    t = tau_hat(fit, problem)
    return float(t * t * (2.0 * fit.support_size / N - 1.0) + _corr_sq(fit, problem) / (N * free * free))


def sigma_hat_sq(fit, problem, rtol=1e-10):
    """Noise-level estimate, computed two ways that must agree.

    The short form subtracts the scaled risk estimate from ``tau_hat^2``;
    the long form expands it.  A disagreement beyond ``rtol`` (relative to
    the size of the terms involved) raises ``NumericError``.
    """
    free = _free_fraction(fit, problem)
    n, N, k = problem.n, problem.N, fit.support_size
    t2 = tau_hat(fit, problem) ** 2
    short = t2 - N / n * r_hat(fit, problem)
    corr = _corr_sq(fit, problem) / (n * free * free)
    long = t2 * (1.0 + N / n - 2.0 * k / n) - corr
    scale = max(1.0, t2 * (1.0 + N / n), corr)
    if abs(short - long) > rtol * scale:
        raise NumericError(f"noise estimate forms disagree: {short!r} vs {long!r}")
    return float(long)


def sure(fit, problem, sigma_sq):
    """Stein's unbiased estimate of ``||X(theta* - theta_hat)||^2 / n + sigma^2``."""
    if sigma_sq < 0:
        raise DomainError(f"sigma_sq must be >= 0, got {sigma_sq}")
    r = fit.residual
    return float((np.dot(r, r) + 2.0 * sigma_sq * fit.support_size) / problem.n)


def report(fit, problem, sigma=None, cv=None):
    """Bundle every estimator for one fit.

    With ``sigma`` given, SURE uses the true noise variance; otherwise it
    plugs in ``sigma_hat_sq`` of the same fit (clipped at 0).
    """
    s2 = sigma_hat_sq(fit, problem)
    if sigma is None:
        sure_val, source = sure(fit, problem, max(s2, 0.0)), "estimated"
    else:
        sure_val, source = sure(fit, problem, sigma * sigma), "true"
    return EstimatorReport(
        lam=fit.lam,
        tau_hat=tau_hat(fit, problem),
        r_hat=r_hat(fit, problem),
        sigma_hat_sq=s2,
        sure=sure_val,
        sure_sigma_source=source,
        support_frac=fit.support_size / problem.N,
        cv_risk=cv,
    )


def cv_folds(n, k, rng):
    """Split ``range(n)`` into ``k`` shuffled contiguous blocks.

    When ``k`` does not divide ``n`` the first ``n % k`` folds carry one
    extra row.  ``rng`` is a ``numpy.random.Generator`` or a seed.
    """
    if k < 2:
        raise ConfigError(f"need at least 2 folds, got {k}")
    if k > n:
        raise ConfigError(f"{k} folds requested but only {n} rows: some folds would be empty")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    perm = rng.permutation(n)
    base, extra = divmod(n, k)
    sizes = [base + (1 if i < extra else 0) for i in range(k)]
    edges = np.concatenate(([0], np.cumsum(sizes)))
    return [np.sort(perm[edges[i]:edges[i + 1]]) for i in range(k)]


def cv_risk(problem, lambda_grid, k, rng, **fit_opts):
    """k-fold cross-validated risk along ``lambda_grid`` (returned in grid order).

    Fold ``i`` is fit on the other rows with objective
    ``||y' - X' theta||^2 / (2 n_i) + lam |theta|_1 / n``, which is a regular
    Lasso on ``n_i`` rows at ``lam * n_i / n``.  The held-out squared errors
    are summed over folds and divided by ``N``.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    folds = cv_folds(problem.n, k, rng)
    order = np.argsort(grid)
    total = np.zeros(grid.size)
    all_rows = np.arange(problem.n)
    for held in folds:
        train = problem.rows(np.setdiff1d(all_rows, held, assume_unique=True))
        fits = lasso.path(train, grid[order] * (train.n / problem.n), **fit_opts)
        Xh, yh = problem.X[held], problem.y[held]
        for j, f in zip(order, fits):
            e = yh - Xh @ f.theta_hat
            total[j] += np.dot(e, e)
    return total / problem.N
