"""Picking the penalty from the data alone.

One problem, five ways of choosing lambda.  Three minimise a data-driven
curve, two are formulas.  The true signal is used only to score the result.
"""

import numpy as np

from lasso_se import experiments as ex
from lasso_se import lasso, selection

cfg = ex.ExperimentConfig(N=1500, delta=0.8, sigma=0.2, seed=3)
problem, theta = ex.replicate_problem(cfg, 0)
grid = selection.default_grid(cfg.sigma, cfg.N, 30)
fits = lasso.path(problem, grid)

risk = np.array([np.mean((f.theta_hat - theta) ** 2) for f in fits])
print(f"oracle (best on the grid): lambda {grid[risk.argmin()]:.4f}, risk {risk.min():.5f}")

rules = [
    ("EST", dict(fits=fits)),                     # smallest estimated effective noise
    ("SURE", dict(fits=fits, sigma=cfg.sigma)),   # unbiased prediction-error estimate
    ("CV", dict(folds=4, rng=11)),
    ("THEORY", dict(sigma=cfg.sigma)),
    ("MINIMAX", dict(sigma=cfg.sigma, s0=0.1, delta=cfg.effective_delta)),
]
for name, kw in rules:
    res = selection.select(name, problem, grid, theta_star=theta, **kw)
    print(f"{name:>8}: lambda {res.lambda_selected:.4f}, risk {res.achieved_risk:.5f}")

# Cross-validation sees a risk shifted upwards by about delta * sigma^2.
res = selection.select("CV", problem, grid, folds=4, rng=11)
shift = res.criterion_curve - risk
print(f"\nCV curve minus true risk: median {np.median(shift):.4f}, "
      f"delta*sigma^2 = {cfg.effective_delta * cfg.sigma ** 2:.4f}")
