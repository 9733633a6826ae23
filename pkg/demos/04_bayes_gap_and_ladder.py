"""How far is the best Lasso from the Bayes risk, and where do the
distributional predictions stop being uniform?
"""

# %% Bayes benchmark across sparsity levels.
from lasso_se import experiments as ex
from lasso_se import mmse
from lasso_se import state_evolution as se
from lasso_se.selection import default_grid

delta, sigma = 0.8, 0.2
grid = default_grid(sigma, 2000, 30)
print(f"{'s':>5} {'Bayes':>9} {'best Lasso':>11} {'ratio':>6}")
for s in (0.02, 0.05, 0.1, 0.15, 0.2):
    bayes = mmse.mmse_limit(delta, sigma, mmse.MmsePrior(s))
    law = se.AtomDistribution.sparse_gaussian(s, 801)
    best = min(f.r_star for f in se.se_path(law, delta, sigma, grid))
    print(f"{s:5.2f} {bayes:9.5f} {best:11.5f} {best / bayes:6.2f}")

# %% The ladder signal (N, 2N, ..., kN, 0, ...) has huge, well separated atoms.
# In the plain Gaussian sequence model, each big atom's fit moves with its
# own noise, so the empirical joint law cannot concentrate on any fixed law.
out = ex.ladder_demo(N=1000, k=50, lam=0.0, tau=1.0, seed=0, replicates=20)
print(f"\nladder: W2 per replicate between {out['w2_values'].min():.3f} and {out['w2_values'].max():.3f}; "
      f"sqrt(k/N) = {out['bound']:.3f}; exceeded in {out['frac_exceeding']:.0%} of replicates")

# With no big atoms the same comparison is small.
flat = ex.ladder_demo(N=1000, k=0, replicates=5)
print(f"no ladder: W2 at most {flat['w2_values'].max():.3f}")
