"""Two-step analysis of a count series: CML intercept, CLS coefficient, unit-root test."""
from pathlib import Path

import nuinarch as nu
from nuinarch.cli import ingest_csv

data = ingest_csv(Path(__file__).parents[1] / "tests" / "data" / "synthetic_uk_like.csv")
series = data.series
fit = nu.cml_fit(series)
cls = nu.cls_alpha(series, fit.beta_hat)
print(f"n = {series.n}, beta_hat = {fit.beta_hat:.4f}, alpha_hat (CLS) = {cls.alpha_hat:.5f}")

d0 = nu.sample_limit(nu.CirParams(fit.beta_hat, 0.0, 1000), 20_000, nu.RngStream(5))
res = nu.unit_root_test(series, fit.beta_hat, d0, zeta=0.05)
print(f"n(alpha_hat - 1) = {res.statistic:.3f}, q_0.05 = {res.critical_value:.3f}, "
      f"p = {res.p_value:.3f}, reject = {res.reject}")

sampler = nu.LimitLawSampler(1000, 20_000, seed=5)
ci = nu.ci_nearly_unstable(series, fit.beta_hat, sampler, 0.95)
print(f"95% interval for alpha: [{ci.lower:.5f}, {ci.upper:.5f}]  (gamma_hat = {ci.details['gamma_hat']:.2f})")
