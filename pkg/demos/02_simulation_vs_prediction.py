"""Finite-size Lasso fits against the scalar predictions.

Draws a few Gaussian designs at N=1000 and prints, per penalty, the
replicate means of the empirical quantities next to their predicted
values.  About half a minute on one core; set LASSO_SE_THREADS to use more.
"""

import numpy as np

from lasso_se import experiments as ex

cfg = ex.ExperimentConfig(N=1000, delta=0.8, sigma=0.2, prior="sparse-gaussian:s=0.1",
                          replicates=4, lambda_count=8, folds=0, seed=7)
result = ex.run_experiment(cfg)
table = result.summary["per_lambda"]

pairs = [("risk_emp", "risk_pred"), ("support_frac", "s_star"), ("subgrad_norm", "kappa_star"),
         ("tau_hat", "tau_star")]
print(f"{'lambda':>7} " + " ".join(f"{a:>13} {b:>10}" for a, b in pairs))
for lam in result.grid:
    row = table[float(lam)]
    cells = " ".join(f"{row[a][0]:13.5f} {row[b][0]:10.5f}" for a, b in pairs)
    print(f"{lam:7.4f} {cells}")

# Residual and prediction error line up with beta*^2 and P*.
worst_res = max(abs(table[float(l)]["resid_emp"][0] / table[float(l)]["resid_pred"][0] - 1) for l in result.grid)
worst_pe = max(abs(table[float(l)]["pred_err_emp"][0] / table[float(l)]["pred_err_pred"][0] - 1)
               for l in result.grid)
print(f"\nlargest relative gap: residual {worst_res:.1%}, prediction error {worst_pe:.1%}")

# The noise estimate needs no knowledge of sigma.
s2 = np.array([table[float(l)]["sigma_hat_sq"][0] for l in result.grid])
print(f"noise variance estimates across the grid: {s2.min():.4f} .. {s2.max():.4f} (true 0.04)")
