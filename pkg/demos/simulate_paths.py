"""Simulate INARCH(1) paths near the unit root and compare with the mean ramp."""
import numpy as np

import nuinarch as nu

n = 500
for gamma in (0.0, 5.0, 50.0):
    spec = nu.NearlyUnstableSpec(beta=1.0, gamma=gamma, n=n)
    paths = [nu.simulate_nu_inarch(spec, 0, nu.RngStream(1, 0, (r,))) for r in range(200)]
    # X_n / n settles near beta (1 - e^-gamma) / gamma
    end = np.mean([p.values[-1] / n for p in paths])
    print(f"gamma={gamma:5.1f}  alpha={spec.alpha:.3f}  mean X_n/n = {end:.3f}  "
          f"limit {nu.limiting_mean_scale(spec, 1.0):.3f}")

one = nu.simulate_nu_inarch(nu.NearlyUnstableSpec(1.0, 5.0, n), 0, nu.RngStream(2))
path = nu.normalize_path(one)
print("normalised path at t = 0.25, 0.5, 1:", path([0.25, 0.5, 1.0]))
