"""Size and coverage experiments at reduced scale."""
import nuinarch as nu

cfg = nu.McConfig(replications=2000, seed=1, ns=(50, 200), zetas=(0.1, 0.05),
                  limit_steps=1000, limit_draws=20_000)
size = nu.run_size(cfg)
print(size.to_csv())

cov = nu.run_coverage(nu.McConfig(replications=1000, seed=2, ns=(500,), alphas=(0.99, 0.7)))
for row in cov.rows:
    print(f"alpha={row['alpha']}, level={row['level']}: coverage {row['value']:.3f} "
          f"[{row['wilson_low']:.3f}, {row['wilson_high']:.3f}]")
