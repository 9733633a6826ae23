"""Lasso fits on a fixed design.

The objective uses the ``1/(2n)`` and ``lam/n`` scaling

    L(theta) = ||y - X theta||^2 / (2n) + lam |theta|_1 / n

so that ``lam`` lives in the same units as the state-evolution penalty.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._cd import cd_solve
from .errors import ConvergenceError, DegenerateError, DomainError

DEFAULT_TOL = 1e-10
DEFAULT_KKT_TOL = 1e-6
# above this many columns the N x N Gram matrix is not cached along a path
GRAM_MAX_COLUMNS = 4096


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Design matrix ``X`` (n x N) and response ``y``; immutable once built."""

    X: np.ndarray
    y: np.ndarray
    column_sq_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.asfortranarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DomainError("X must be a non-empty 2-d array")
        if y.shape[0] != X.shape[0]:
            raise DomainError(f"y has {y.shape[0]} entries but X has {X.shape[0]} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DomainError("X and y must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_sq_norms", np.einsum("ij,ij->j", X, X))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def N(self):
        return self.X.shape[1]

    def rows(self, idx):
        """Sub-problem restricted to the rows ``idx``."""
        return DesignProblem(self.X[idx], self.y[idx])


@dataclass(frozen=True, eq=False)
class LassoFit:
    lam: float
    theta_hat: np.ndarray
    residual: np.ndarray
    support_size: int
    objective: float
    subgradient: np.ndarray
    debiased: np.ndarray | None
    sweeps: int = 0
    kkt_residual: float = 0.0
    objective_history: np.ndarray = field(default=None, repr=False)


def objective(problem, theta, lam):
    r = problem.y - problem.X @ theta
    return (0.5 * np.dot(r, r) + lam * np.abs(theta).sum()) / problem.n


def fit(problem, lam, tol=DEFAULT_TOL, kkt_tol=DEFAULT_KKT_TOL, max_sweeps=None,
        warm_start=None, order=None, gram=None):
    """Cyclic coordinate descent with exact soft-threshold updates.

    Stops once a full sweep moves no coordinate by more than
    ``tol * max(1, ||theta||_inf)`` and the subgradient ``X^T r / lam`` is
    within ``kkt_tol`` of the subdifferential of ``|theta|_1``.
    ``order`` permutes the coordinate visiting order.

    Between batches of sweeps the iterate is pushed along its current sign
    pattern by an exact least-squares step (see ``_face_step``), which cuts
    the sweep count when the support is large.  ``gram`` may hold a
    precomputed ``X^T X`` to make that step cheaper.
    """
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if tol <= 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    N = problem.N
    if max_sweeps is None:
        max_sweeps = 100 * N
    theta = np.zeros(N) if warm_start is None else np.array(warm_start, dtype=float)
    r = problem.y - problem.X @ theta
    order = np.arange(N, dtype=np.int64) if order is None else np.asarray(order, dtype=np.int64)
    history = []
    total = 0
    chunk = 16
    ok = False
    kkt = np.inf
    while total < max_sweeps:
        m = min(chunk, max_sweeps - total)
        buf = np.empty(m)
        sweeps, kkt, ok = cd_solve(problem.X, problem.y, theta, r, problem.column_sq_norms,
                                   float(lam), float(tol), float(kkt_tol), int(m), order, buf)
        history.append(buf[:sweeps])
        total += sweeps
        if ok:
            break
        if _face_step(problem, theta, r, lam, gram):
            history.append(np.array([(0.5 * np.dot(r, r) + lam * np.abs(theta).sum())]))
        chunk = min(2 * chunk, 32)
    if not ok:
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps at lambda={lam:.6g}",
            lam=lam, kkt_residual=kkt, sweeps=total,
        )
    hist = np.concatenate(history) / problem.n
    return _make_fit(problem, lam, theta, total, kkt, hist)


def _face_step(problem, theta, r, lam, gram=None):
    """Move along the current support and sign pattern towards its minimiser.

    On that face the objective is a convex quadratic.  The full step, with
    coordinates whose sign flipped set to zero, is taken when it lowers the
    objective; otherwise the step stops at the first sign change, which can
    only lower it.  Updates ``theta`` and ``r`` in place and reports whether
    anything moved.
    """
    A = np.flatnonzero(theta)
    if A.size == 0 or A.size >= problem.n:
        return False
    XA = problem.X[:, A]
    signs = np.sign(theta[A])
    G = XA.T @ XA if gram is None else gram[np.ix_(A, A)]
    try:
        cf = linalg.cho_factor(G, overwrite_a=True, check_finite=False)
    except linalg.LinAlgError:
        return False
    target = linalg.cho_solve(cf, XA.T @ problem.y - lam * signs)
    cur = theta[A]
    current = 0.5 * np.dot(r, r) + lam * np.abs(cur).sum()
    flips = np.sign(target) != signs
    # first try the full step with sign-flipped coordinates projected to
    # zero; if that does not lower the objective, stop at the first flip
    candidates = [np.where(flips, 0.0, target)]
    if np.any(flips):
        ratios = np.full(A.size, np.inf)
        ratios[flips] = cur[flips] / (cur[flips] - target[flips])
        step = float(ratios.min())
        new = cur + step * (target - cur)
        new[(ratios == step) | (np.sign(new) != signs)] = 0.0
        candidates.append(new)
    for new in candidates:
        cand = problem.y - XA @ new
        if 0.5 * np.dot(cand, cand) + lam * np.abs(new).sum() < current:
            theta[A] = new
            r[:] = cand
            return True
    return False


def _make_fit(problem, lam, theta, sweeps=0, kkt=0.0, history=None):
    r = problem.y - problem.X @ theta
    support = int(np.count_nonzero(theta))
    v = problem.X.T @ r / lam
    obj = (0.5 * np.dot(r, r) + lam * np.abs(theta).sum()) / problem.n
    deb = theta + problem.X.T @ r / (1.0 - support / problem.n) if support < problem.n else None
    return LassoFit(lam=float(lam), theta_hat=theta, residual=r, support_size=support,
                    objective=float(obj), subgradient=v, debiased=deb, sweeps=int(sweeps),
                    kkt_residual=float(kkt), objective_history=history)


def path(problem, lambda_grid, **opts):
    """Warm-started fits from the largest to the smallest ``lambda``.

    The grid may be given in either order (values must be distinct); the
    fits are returned sorted by ascending ``lambda``.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise DomainError("lambda grid must be a non-empty 1-d array of positive values")
    desc = np.sort(grid)[::-1]
    if np.any(np.diff(desc) == 0):
        raise DomainError("lambda grid values must be distinct")
    if "gram" not in opts and problem.N <= GRAM_MAX_COLUMNS and grid.size > 1:
        opts["gram"] = problem.X.T @ problem.X
    fits = []
    theta = None
    for i, lam in enumerate(desc):
        try:
            f = fit(problem, lam, warm_start=theta, **opts)
        except ConvergenceError as exc:
            exc.diagnostics["index"] = i
            raise
        fits.append(f)
        theta = f.theta_hat
    return fits[::-1]


def debias(fit_, problem):
    """``theta_hat + X^T (y - X theta_hat) / (1 - ||theta_hat||_0 / n)``."""
    k = int(np.count_nonzero(fit_.theta_hat))
    if k >= problem.n:
        raise DegenerateError(f"support size {k} >= n={problem.n}: debiasing undefined")
    r = problem.y - problem.X @ fit_.theta_hat
    return fit_.theta_hat + problem.X.T @ r / (1.0 - k / problem.n)


def kkt_report(fit_, problem, kkt_tol=DEFAULT_KKT_TOL):
    """Optimality diagnostics: subgradient bound, sign agreement, duality gap.

    The gap is measured against the dual point obtained by scaling the
    residual into ``{u : ||X^T u||_inf <= lam}``, in the ``1/n`` units of
    the objective.
    """
    theta, lam = fit_.theta_hat, fit_.lam
    r = problem.y - problem.X @ theta
    corr = problem.X.T @ r
    v = corr / lam
    on = theta != 0
    sign_viol = int(np.count_nonzero(np.abs(v[on] - np.sign(theta[on])) > kkt_tol))
    u = r * min(1.0, lam / np.max(np.abs(corr))) if np.any(corr) else r
    primal = 0.5 * np.dot(r, r) + lam * np.abs(theta).sum()
    dual = 0.5 * np.dot(problem.y, problem.y) - 0.5 * np.dot(problem.y - u, problem.y - u)
    return {
        "max_abs_subgrad": float(np.max(np.abs(v))),
        "sign_violations": sign_viol,
        "duality_gap": float(max(primal - dual, 0.0) / problem.n),
    }
