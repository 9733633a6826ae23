import numpy as np
import pytest

from frozen_values import LAMBDA_MM_03_08_02
from lasso_se import estimators, lasso, selection
from lasso_se.errors import ConfigError, DomainError, InfeasibleError


@pytest.fixture(scope="module")
def problem():
    rng = np.random.default_rng(21)
    n, N = 160, 200
    X = rng.standard_normal((n, N)) / np.sqrt(n)
    theta = np.where(rng.random(N) < 0.1, rng.standard_normal(N), 0.0)
    return lasso.DesignProblem(X, X @ theta + 0.2 * rng.standard_normal(n)), theta


def test_theory_lambda():
    assert selection.theory_lambda(1.0, np.e ** 2) == pytest.approx(2.0, abs=1e-14)
    assert selection.theory_lambda(0.2, 8000) == pytest.approx(0.2 * np.sqrt(2 * np.log(8000)))
    with pytest.raises(DomainError):
        selection.theory_lambda(0.0, 100)


def test_minimax_lambda():
    assert selection.minimax_lambda(0.3, 0.8, 0.2) == pytest.approx(LAMBDA_MM_03_08_02, abs=2e-6)
    with pytest.raises(InfeasibleError):
        selection.minimax_lambda(0.6, 0.8, 0.2)


def test_default_grid():
    g = selection.default_grid(0.2, 1000)
    assert g.size == 40 and g[0] == pytest.approx(0.02)
    assert g[-1] == pytest.approx(2 * selection.theory_lambda(0.2, 1000))
    assert np.allclose(np.diff(np.log(g)), np.log(g[1] / g[0]))


def test_ties_and_nan():
    assert selection.argmin_smallest([3.0, 3.0, 3.0]) == 0
    assert selection.argmin_smallest([5.0, 1.0, 2.0, 1.0]) == 1
    assert selection.argmin_smallest([np.nan, 2.0, 1.0]) == 2
    with pytest.raises(DomainError):
        selection.argmin_smallest([np.nan, np.nan])


def test_constant_curve_picks_smallest(problem):
    prob, _ = problem
    grid = np.geomspace(0.01, 1.0, 7)
    res = selection.select("CV", prob, grid, curve=np.ones(7))
    assert res.lambda_selected == grid[0] and res.index == 0


@pytest.mark.parametrize("rule", ["EST", "SURE", "CV"])
def test_data_driven_rules(problem, rule):
    prob, theta = problem
    grid = selection.default_grid(0.2, prob.N, 25)
    fits = lasso.path(prob, grid)
    res = selection.select(rule, prob, grid, fits=fits, sigma=0.2, folds=4, rng=3, theta_star=theta)
    assert res.lambda_selected in grid
    assert res.criterion_curve[res.index] == np.min(res.criterion_curve)
    assert res.achieved_risk == pytest.approx(np.mean((fits[res.index].theta_hat - theta) ** 2))
    again = selection.select(rule, prob, grid, sigma=0.2, folds=4, rng=3, theta_star=theta)
    assert again.lambda_selected == res.lambda_selected
    assert np.array_equal(again.criterion_curve, res.criterion_curve)
    # positive rescaling of the curve does not move the choice
    for c in (1e-3, 7.0):
        scaled = selection.select(rule, prob, grid, curve=c * res.criterion_curve)
        assert scaled.index == res.index


def test_curves_are_the_estimators(problem):
    prob, _ = problem
    grid = np.geomspace(0.02, 0.8, 9)
    fits = lasso.path(prob, grid)
    est = selection.select("EST", prob, grid, fits=fits)
    assert np.allclose(est.criterion_curve, [estimators.tau_hat(f, prob) for f in fits])
    sure = selection.select("SURE", prob, grid, fits=fits)
    want = [estimators.sure(f, prob, max(estimators.sigma_hat_sq(f, prob), 0.0)) for f in fits]
    assert np.allclose(sure.criterion_curve, want)


def test_fixed_rules(problem):
    prob, theta = problem
    grid = np.geomspace(0.02, 0.8, 5)
    th = selection.select("theory", prob, grid, sigma=0.2, theta_star=theta)
    assert th.rule == "THEORY" and th.lambda_selected == selection.theory_lambda(0.2, prob.N)
    assert th.achieved_risk >= 0
    mm = selection.select("MINIMAX", prob, grid, sigma=0.2, s0=0.3, delta=0.8)
    assert mm.lambda_selected == pytest.approx(LAMBDA_MM_03_08_02, abs=2e-6)
    with pytest.raises(ConfigError):
        selection.select("MINIMAX", prob, grid, sigma=0.2)
    with pytest.raises(ConfigError):
        selection.select("THEORY", prob, grid)


def test_bad_inputs(problem):
    prob, _ = problem
    with pytest.raises(ConfigError):
        selection.select("BIC", prob, [0.1, 0.2])
    with pytest.raises(DomainError):
        selection.select("EST", prob, [0.2, 0.1])
    with pytest.raises(DomainError):
        selection.select("CV", prob, [0.1, 0.2], curve=[1.0])
