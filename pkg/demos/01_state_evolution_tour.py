"""A walk through the scalar predictions for one sparse problem.

Run with ``python demos/01_state_evolution_tour.py``.  Everything here is
deterministic and takes a few seconds.
"""

# %% Setup: 10% of the coordinates carry a standard Gaussian, the rest are zero.
from lasso_se import scalar_gaussian as sg
from lasso_se import state_evolution as se
from lasso_se.selection import default_grid, theory_lambda

delta, sigma, s = 0.8, 0.2, 0.1
law = se.AtomDistribution.sparse_gaussian(s)
print(f"signal law: {law.values.size} atoms, E[theta^2] = {law.second_moment:.4f}")

# %% Is this sparsity recoverable at all?  Below the critical level the
# penalized fit is stable for every penalty; above it, small penalties blow up.
print(f"critical sparsity at delta={delta}: {sg.s_max(delta):.4f}  (we use s={s})")
print(f"smallest admissible threshold ratio alpha_min = {sg.alpha_min(delta):.4f}")

# %% Solve at one penalty and look at every derived number.
fp = se.solve_fixed_point(law, delta, sigma, 0.3)
r1, r2 = se.residuals(law, fp)
print(f"\nlambda = 0.3: beta* = {fp.beta_star:.5f}, tau* = {fp.tau_star:.5f}, "
      f"threshold = {fp.threshold:.5f}")
print(f"  predicted risk {fp.r_star:.5f}, prediction error {fp.p_star:.5f}, "
      f"active fraction {fp.s_star:.4f}, subgradient norm {fp.kappa_star:.4f}")
print(f"  equation residuals {r1:.1e}, {r2:.1e}")

# %% Sweep the default grid.  The risk curve is U-shaped: too little penalty
# admits noise, too much shrinks the signal away.
grid = default_grid(sigma, 2000, 25)
path = se.se_path(law, delta, sigma, grid)
print(f"\n{'lambda':>8} {'risk':>8} {'s*':>7} {'tau*':>7}")
for lam, f in zip(grid[::3], path[::3]):
    print(f"{lam:8.4f} {f.r_star:8.5f} {f.s_star:7.4f} {f.tau_star:7.4f}")

best = min(path, key=lambda f: f.r_star)
print(f"\nbest grid penalty {best.lam:.4f} with risk {best.r_star:.5f}")

# %% Two fixed recipes for the penalty, for comparison with the best one.
lam_u = theory_lambda(sigma, 2000)
lam_mm = sg.lambda_minimax(s, delta, sigma)
for name, lam in [("universal", lam_u), ("minimax", lam_mm)]:
    f = se.solve_fixed_point(law, delta, sigma, lam)
    print(f"{name:>10}: lambda {lam:.4f}, risk {f.r_star:.5f} ({f.r_star / best.r_star:.2f}x best)")
