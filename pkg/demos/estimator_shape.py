"""Scaled CLS errors against the limit law: KDE and quantile-quantile pairs."""
import numpy as np
from scipy import stats

import nuinarch as nu

cfg = nu.McConfig(replications=3000, seed=3, ns=(500,), alphas=(0.99,))
est = nu.standardized_estimates(cfg, "n")
law = nu.sample_limit(nu.CirParams(1.0, 5.0, 1000), 20_000, nu.RngStream(6))

grid, dens = nu.kde(est, grid_size=9)
for x, d in zip(grid, dens):
    print(f"{x:8.2f} {'#' * int(400 * d)}")

qq = nu.qq_pairs(est, law)
print("qq correlation:", np.corrcoef(qq[:, 0], qq[:, 1])[0, 1].round(4))
print("KS distance:", round(stats.ks_2samp(est, law.values).statistic, 4))

# far from the unit root sqrt(n) scaling and the normal law take over
sn = nu.standardized_estimates(nu.McConfig(replications=2000, seed=4, ns=(5000,), alphas=(0.5,)), "sqrt_n")
print(f"sqrt(n) variance {sn.var():.3f}, moment sandwich {nu.cls_avar_from_moments(1.0, 0.5):.3f}, "
      f"closed form {nu.stationary_cls_avar(1.0, 0.5):.3f}")
