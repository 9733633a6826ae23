import numpy as np
import pytest

import oracles
from lasso_se import lasso
from lasso_se.errors import ConvergenceError, DegenerateError, DomainError


def gaussian_instance(n, N, k, sigma, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, N)) / np.sqrt(n)
    theta = np.zeros(N)
    theta[rng.choice(N, k, replace=False)] = rng.standard_normal(k)
    y = X @ theta + sigma * rng.standard_normal(n)
    return lasso.DesignProblem(X, y), theta


def test_problem_validation():
    with pytest.raises(DomainError):
        lasso.DesignProblem(np.ones((3, 2)), np.ones(4))
    with pytest.raises(DomainError):
        lasso.DesignProblem(np.array([[np.inf]]), np.ones(1))
    p = lasso.DesignProblem(np.arange(6.0).reshape(3, 2), np.ones(3))
    assert (p.n, p.N) == (3, 2)
    assert np.allclose(p.column_sq_norms, [0 + 4 + 16, 1 + 9 + 25])
    with pytest.raises(ValueError):
        p.X[0, 0] = 1.0
    sub = p.rows([0, 2])
    assert sub.n == 2 and np.array_equal(sub.y, [1.0, 1.0])


@pytest.mark.parametrize("seed", range(20))
def test_matches_proximal_gradient_oracle(seed):
    prob, _ = gaussian_instance(20, 40, 5, 0.3, seed)
    f = lasso.fit(prob, 0.5)
    theta_ref, obj_ref = oracles.fista(prob.X, prob.y, 0.5)
    assert abs(f.objective - obj_ref) <= 1e-8
    assert f.objective <= obj_ref + 1e-12
    assert np.max(np.abs(f.theta_hat - theta_ref)) <= 1e-6


def test_zero_above_critical_lambda():
    prob, _ = gaussian_instance(30, 50, 5, 0.1, 1)
    lam_max = np.max(np.abs(prob.X.T @ prob.y))
    for lam in (lam_max, 1.5 * lam_max):
        f = lasso.fit(prob, lam)
        assert np.count_nonzero(f.theta_hat) == 0
        rep = lasso.kkt_report(f, prob)
        assert rep["max_abs_subgrad"] == pytest.approx(lam_max / lam) and rep["max_abs_subgrad"] <= 1
    assert np.count_nonzero(lasso.fit(prob, 0.99 * lam_max).theta_hat) >= 1


@pytest.mark.parametrize("y0,lam", [(2.0, 0.5), (-3.0, 1.0), (0.4, 1.0)])
def test_scalar_problem(y0, lam):
    f = lasso.fit(lasso.DesignProblem(np.ones((1, 1)), np.array([y0])), lam)
    assert f.theta_hat[0] == np.sign(y0) * max(abs(y0) - lam, 0.0)


def test_bad_arguments():
    prob, _ = gaussian_instance(10, 12, 2, 0.1, 2)
    with pytest.raises(DomainError):
        lasso.fit(prob, 0.0)
    with pytest.raises(DomainError):
        lasso.fit(prob, 0.1, tol=0.0)
    with pytest.raises(ConvergenceError) as info:
        lasso.fit(prob, 1e-4, max_sweeps=1)
    assert "kkt_residual" in info.value.diagnostics


def test_objective_monotone_and_exact_zeros():
    prob, _ = gaussian_instance(200, 400, 40, 0.2, 3)
    f = lasso.fit(prob, 0.05)
    h = f.objective_history
    assert h.size >= 2 and np.all(np.diff(h) <= 1e-13 * h[0])
    assert f.objective == pytest.approx(lasso.objective(prob, f.theta_hat, 0.05), rel=1e-12)
    assert f.support_size == np.count_nonzero(f.theta_hat)
    rep = lasso.kkt_report(f, prob)
    assert rep["max_abs_subgrad"] <= 1 + 1e-6 and rep["sign_violations"] == 0
    # off the support the subgradient only has to stay inside [-1, 1]
    off = f.theta_hat == 0
    assert np.all(np.abs(f.subgradient[off]) <= 1 + 1e-6)


def test_fixed_point_identity():
    prob, _ = gaussian_instance(60, 100, 10, 0.2, 4)
    lam = 0.08
    f = lasso.fit(prob, lam)
    c = 0.9 / np.linalg.norm(prob.X, 2) ** 2
    moved = oracles.soft(f.theta_hat + c * prob.X.T @ (prob.y - prob.X @ f.theta_hat), c * lam)
    assert np.max(np.abs(moved - f.theta_hat)) <= 1e-8


def test_perturbation_increases_objective():
    prob, _ = gaussian_instance(60, 100, 10, 0.2, 5)
    f = lasso.fit(prob, 0.08)
    base = lasso.objective(prob, f.theta_hat, 0.08)
    for j in (0, int(np.flatnonzero(f.theta_hat)[0]), 99):
        for eps in (1e-3, -1e-3):
            th = f.theta_hat.copy()
            th[j] += eps
            assert lasso.objective(prob, th, 0.08) > base


def test_coordinate_order_does_not_matter():
    prob, _ = gaussian_instance(150, 300, 30, 0.2, 6)
    a = lasso.fit(prob, 0.05)
    b = lasso.fit(prob, 0.05, order=np.random.default_rng(0).permutation(300))
    c = lasso.fit(prob, 0.05, order=np.arange(300)[::-1])
    assert np.max(np.abs(a.theta_hat - b.theta_hat)) <= 1e-7
    assert np.max(np.abs(a.theta_hat - c.theta_hat)) <= 1e-7


def test_duality_gap_small():
    prob, _ = gaussian_instance(100, 200, 20, 0.2, 7)
    f = lasso.fit(prob, 0.05)
    gap = lasso.kkt_report(f, prob)["duality_gap"]
    assert 0 <= gap <= 1e-8 * f.objective


def test_path_against_cold_starts():
    prob, _ = gaussian_instance(120, 200, 20, 0.2, 8)
    grid = np.geomspace(0.01, 1.0, 40)
    fits = lasso.path(prob, grid[::-1])
    assert [f.lam for f in fits] == pytest.approx(list(grid))
    for lam, f in zip(grid, fits):
        cold = lasso.fit(prob, lam)
        assert f.objective <= cold.objective + 1e-9
        assert np.max(np.abs(f.theta_hat - cold.theta_hat)) <= 1e-7
    (one,) = lasso.path(prob, [0.1])
    assert np.array_equal(one.theta_hat, lasso.fit(prob, 0.1).theta_hat)
    with pytest.raises(DomainError):
        lasso.path(prob, [0.1, 0.1])
    with pytest.raises(DomainError):
        lasso.path(prob, [0.1, -0.1])


def test_debias():
    prob, _ = gaussian_instance(40, 60, 5, 0.2, 9)
    big = lasso.fit(prob, 10 * np.max(np.abs(prob.X.T @ prob.y)))
    assert np.allclose(lasso.debias(big, prob), prob.X.T @ prob.y)
    f = lasso.fit(prob, 0.05)
    assert np.allclose(lasso.debias(f, prob), f.debiased)
    # square invertible system: a tiny penalty leaves a near-zero residual
    rng = np.random.default_rng(3)
    A = rng.standard_normal((8, 8)) / np.sqrt(8)
    sq = lasso.DesignProblem(A, rng.standard_normal(8))
    tiny = lasso.fit(sq, 1e-9, max_sweeps=10 ** 6)
    assert tiny.support_size == 8 and tiny.debiased is None
    assert np.linalg.norm(tiny.residual) <= 1e-6
    assert np.allclose(tiny.theta_hat, np.linalg.solve(A, sq.y), atol=1e-5)
    with pytest.raises(DegenerateError):
        lasso.debias(tiny, sq)


def test_debias_degenerate():
    prob = lasso.DesignProblem(np.eye(2), np.array([3.0, -4.0]))
    f = lasso.fit(prob, 0.5)
    assert f.support_size == 2
    with pytest.raises(DegenerateError):
        lasso.debias(f, prob)
