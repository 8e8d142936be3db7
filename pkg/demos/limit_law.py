"""Sample the limit law D_gamma and tabulate unit-root critical values."""
import nuinarch as nu

# a coarse grid keeps this quick; use steps=5000, draws=100000 for real tables
for beta in (0.269, 1.0):
    d0 = nu.sample_limit(nu.CirParams(beta, 0.0, steps=1000), 20_000, nu.RngStream(3))
    print(f"beta={beta}: q01={d0.quantile(0.01):8.3f}  q05={d0.quantile(0.05):8.3f}  "
          f"q10={d0.quantile(0.10):8.3f}")

# stronger mean reversion pulls the law to the left
for gamma in (0.0, 5.0, 20.0):
    d = nu.sample_limit(nu.CirParams(1.0, gamma, 1000), 20_000, nu.RngStream(4))
    print(f"gamma={gamma:4.1f}  median {d.median():7.3f}")

table = nu.CriticalTable.from_distribution(d0)
print("table round trip exact:", nu.CriticalTable.from_json(table.to_json()).to_json() == table.to_json())
