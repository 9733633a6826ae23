"""Compiled coordinate-descent kernel.

Minimises ``0.5 ||y - X theta||^2 + lam |theta|_1``, which has the same
minimiser as the ``1/(2n), lam/n`` scaled objective.  The residual ``r`` and
``theta`` are updated in place.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _soft(x, b):
    if x > b:
        return x - b
    if x < -b:
        return x + b
    return 0.0


@njit(cache=True, nogil=True)
def _objective(r, theta, lam):
    return 0.5 * np.dot(r, r) + lam * np.sum(np.abs(theta))


@njit(cache=True, nogil=True)
def _update(X, theta, r, col_sq, lam, j):
    # exact minimisation along coordinate j; returns |change|
    cj = col_sq[j]
    if cj == 0.0:
        return 0.0
    old = theta[j]
    xj = X[:, j]
    z = np.dot(xj, r) + cj * old
    new = _soft(z / cj, lam / cj)
    if new != old:
        diff = new - old
        for i in range(r.shape[0]):
            r[i] -= diff * xj[i]
        theta[j] = new
        return abs(diff)
    return 0.0


@njit(cache=True, nogil=True)
def _kkt_violation(X, theta, r, lam):
    # max over coordinates of the distance of X^T r / lam to the subdifferential
    worst = 0.0
    for j in range(X.shape[1]):
        v = np.dot(X[:, j], r) / lam
        if theta[j] > 0:
            e = abs(v - 1.0)
        elif theta[j] < 0:
            e = abs(v + 1.0)
        else:
            e = abs(v) - 1.0
        if e > worst:
            worst = e
    return worst


@njit(cache=True, nogil=True)
def cd_solve(X, y, theta, r, col_sq, lam, tol, kkt_tol, max_sweeps, order, history):
    """Cyclic coordinate descent with active-set inner loops.

    ``order`` is the coordinate visiting order.  ``history`` receives the
    objective after each sweep.  Returns ``(sweeps, kkt, converged)``.
    """
    N = X.shape[1]
    sweeps = 0
    n_hist = 0
    kkt = np.inf
    active = np.empty(N, dtype=np.int64)
    while sweeps < max_sweeps:
        # full sweep
        max_change = 0.0
        for k in range(N):
            j = order[k]
            c = _update(X, theta, r, col_sq, lam, j)
            if c > max_change:
                max_change = c
        sweeps += 1
        if n_hist < history.shape[0]:
            history[n_hist] = _objective(r, theta, lam)
            n_hist += 1
        scale = max(1.0, np.max(np.abs(theta)))
        if max_change <= tol * scale:
            kkt = _kkt_violation(X, theta, r, lam)
            if kkt <= kkt_tol:
                return sweeps, kkt, True
            continue
        # sweeps restricted to the current support
        n_act = 0
        for k in range(N):
            j = order[k]
            if theta[j] != 0.0:
                active[n_act] = j
                n_act += 1
        while sweeps < max_sweeps:
            max_change = 0.0
            for k in range(n_act):
                c = _update(X, theta, r, col_sq, lam, active[k])
                if c > max_change:
                    max_change = c
            sweeps += 1
            if n_hist < history.shape[0]:
                history[n_hist] = _objective(r, theta, lam)
                n_hist += 1
            if max_change <= tol * max(1.0, np.max(np.abs(theta))):
                break
    return sweeps, kkt, False
