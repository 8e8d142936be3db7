"""Acceptance checks, one test per criterion (or per table cell).

Each test prints ``PASS``/``FAIL`` with the observed value; the lines are
repeated in the terminal summary.  Seeds are fixed once here and not tuned.
"""
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from nuinarch import (
    CirParams,
    CountSeries,
    CriticalTable,
    InarchParams,
    McConfig,
    RngStream,
    cls_alpha,
    cls_avar_from_moments,
    marginal_mean,
    marginal_var,
    run_coverage,
    run_power,
    run_size,
    sample_limit,
    simulate_cir,
    stationary_cls_avar,
    standardized_estimates,
)
from nuinarch.cir import TableMismatchError
from nuinarch.cli import analyze, ingest_csv

pytestmark = pytest.mark.acceptance

DATA = Path(__file__).parent / "data"
REPS = 10_000
SEED_D0 = 7


# ---------------------------------------------------------------- formula oracles

def _exact_moments(beta, alpha, kappa, tmax):
    b, a = Fraction(beta), Fraction(alpha)
    m, v = Fraction(kappa), Fraction(0)
    out = [(m, v)]
    for _ in range(tmax):
        m, v = b + a * m, b + a * m + a * a * v
        out.append((m, v))
    return out


def test_c01_closed_forms_match_recursion(verdict):
    worst = 0.0
    for alpha in (0.2, 0.5, 0.9, 0.999, 1.0):
        p = InarchParams(0.7, alpha, 3)
        for t, (m, v) in enumerate(_exact_moments(0.7, alpha, 3, 1000)):
            worst = max(worst,
                        abs(marginal_mean(p, t) - float(m)) / max(1.0, float(m)),
                        abs(marginal_var(p, t) - float(v)) / max(1.0, float(v)))
    verdict("1 closed-form moments vs exact recursion, t<=1000, 5 alphas",
            worst < 1e-11, f"max relative error {worst:.2e}")


def test_c02_closed_form_avar_at_alpha_zero(verdict):
    vals = {b: stationary_cls_avar(b, 0.0) for b in (0.5, 1.0, 2.0)}
    ok = all(v == 2 / (1 + b) for b, v in vals.items())
    verdict("2 closed-form avar(beta, 0) = 2/(1+beta)", ok,
            ", ".join(f"beta={b}: {v!r}" for b, v in vals.items()))


def _q_exact(xp, xn, beta, a):
    return sum((y - beta - a * x) ** 2 for x, y in zip(xp, xn))


def _brute_force_argmin(xp, xn, beta):
    """Zoom a 21-point grid around the best point; Q evaluated in exact rationals."""
    xp = [Fraction(int(v)) for v in xp]
    xn = [Fraction(int(v)) for v in xn]
    beta = Fraction(beta)
    centre, half = Fraction(0), Fraction(64)
    while half > Fraction(1, 10**13):
        grid = [centre + half * Fraction(k - 10, 10) for k in range(21)]
        centre = min(grid, key=lambda a: _q_exact(xp, xn, beta, a))
        half /= 5
    return float(centre)


def test_c03_cls_matches_brute_force(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        vals = rng.poisson(rng.uniform(0.5, 6), size=10)
        vals[1] = max(vals[1], 1)
        s = CountSeries(vals)
        beta = float(rng.uniform(0.1, 3))
        xp, xn = s.pairs()
        worst = max(worst, abs(cls_alpha(s, beta).alpha_hat - _brute_force_argmin(xp, xn, beta)))
    verdict("3 CLS closed form vs brute-force Q minimiser, 100 series", worst < 1e-8,
            f"max |diff| {worst:.2e}")


# ---------------------------------------------------------------- distributional checks

@pytest.mark.slow
@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0, 2.0])
def test_c04_cir_mean_ode(verdict, gamma):
    beta, paths = 1.0, 100_000
    p = CirParams(beta, gamma, 4000)
    root = RngStream(404, int(gamma * 10))
    x1 = np.array([simulate_cir(p, root.child(i)).values[-1] for i in range(paths)])
    target = beta * (-math.expm1(-gamma)) / gamma if gamma > 0 else beta
    se = x1.std(ddof=1) / math.sqrt(paths)
    z = (x1.mean() - target) / se
    verdict(f"4 CIR mean of X(1), gamma={gamma}", abs(z) < 3,
            f"mean {x1.mean():.5f} vs {target:.5f} (z = {z:+.2f})")


@pytest.mark.slow
def test_c05_d0_quantile_at_application_beta(verdict):
    params = CirParams(0.269, 0.0, 5000)
    q = [sample_limit(params, 100_000, RngStream(seed)).quantile(0.05) for seed in (1, 2)]
    ok = all(abs(v + 17.952) <= 0.6 for v in q) and abs(q[0] - q[1]) <= 0.4
    verdict("5 D0 5% quantile at beta=0.269, M=5000, 1e5 draws, seeds 1 and 2", ok,
            f"{q[0]:.3f}, {q[1]:.3f} vs -17.952 +- 0.6")


@pytest.mark.slow
def test_c06_ks_standardized_vs_limit(verdict):
    n, alpha, beta = 500, 0.99, 1.0
    est = standardized_estimates(McConfig(replications=REPS, seed=6, beta=beta, ns=(n,),
                                          alphas=(alpha,)), "n")
    gamma = n * (1 - alpha)
    law = sample_limit(CirParams(beta, gamma, 5000), 100_000, RngStream(66))
    ks = stats.ks_2samp(est, law.values).statistic
    verdict("6 KS(n-scaled CLS errors, D_gamma), alpha=0.99, n=500", ks < 0.03, f"KS = {ks:.4f}")


@pytest.fixture(scope="module")
def sqrt_n_estimates():
    cfg = McConfig(replications=REPS, seed=77, beta=1.0, ns=(10_000,), alphas=(0.5,))
    return standardized_estimates(cfg, "sqrt_n")


@pytest.mark.slow
def test_c07_sqrt_n_variance_closed_form(verdict, sqrt_n_estimates):
    v = sqrt_n_estimates.var(ddof=1)
    ref = stationary_cls_avar(1.0, 0.5)
    verdict("7 var of sqrt(n)-scaled estimates vs closed form", abs(v / ref - 1) <= 0.10,
            f"sample {v:.4f} vs {ref:.4f} (ratio {v / ref:.3f})")


@pytest.mark.slow
def test_c07b_sqrt_n_variance_sandwich(verdict, sqrt_n_estimates):
    v = sqrt_n_estimates.var(ddof=1)
    ref = cls_avar_from_moments(1.0, 0.5)
    verdict("7b var of sqrt(n)-scaled estimates vs moment sandwich", abs(v / ref - 1) <= 0.10,
            f"sample {v:.4f} vs {ref:.4f} (ratio {v / ref:.3f})")


# ---------------------------------------------------------------- table reproduction

@pytest.fixture(scope="module")
def d0_beta_one():
    return sample_limit(CirParams(1.0, 0.0, 5000), 100_000, RngStream(SEED_D0))


@pytest.fixture(scope="module")
def size_report(d0_beta_one):
    cfg = McConfig(replications=REPS, seed=8, beta=1.0, ns=(50, 200, 500), zetas=(0.1, 0.05))
    return run_size(cfg, d0_beta_one)


@pytest.mark.slow
@pytest.mark.parametrize("n,zeta,target", [(50, 0.05, 0.061), (200, 0.05, 0.054),
                                           (500, 0.05, 0.049), (500, 0.10, 0.103)])
def test_c08_size(verdict, size_report, n, zeta, target):
    v = size_report.value("size", n=n, zeta=zeta)
    verdict(f"8 size n={n}, zeta={zeta}", abs(v - target) <= 0.010, f"{v:.4f} vs {target} +- 0.010")


@pytest.mark.slow
@pytest.mark.parametrize("n,alpha,target,tol", [(50, 0.9, 0.623, 0.025), (100, 0.95, 0.865, 0.020),
                                                (300, 0.98, 0.930, 0.020), (500, 0.7, None, None)])
def test_c09_power(verdict, d0_beta_one, n, alpha, target, tol):
    cfg = McConfig(replications=REPS, seed=9, beta=1.0, ns=(n,), alphas=(alpha,), zetas=(0.05,))
    v = run_power(cfg, d0_beta_one).value("power", n=n, alpha=alpha)
    if target is None:
        verdict(f"9 power n={n}, alpha={alpha}", v >= 0.995, f"{v:.4f} vs >= 0.995")
    else:
        verdict(f"9 power n={n}, alpha={alpha}", abs(v - target) <= tol,
                f"{v:.4f} vs {target} +- {tol}")


@pytest.fixture(scope="module")
def coverage_report():
    cfg = McConfig(replications=REPS, seed=10, beta=1.0, ns=(500,), alphas=(0.999, 0.99, 0.7))
    return run_coverage(cfg)


@pytest.mark.slow
@pytest.mark.parametrize("alpha,level,target,tol", [(0.99, 0.95, 0.952, 0.012),
                                                    (0.7, 0.90, 0.915, 0.015),
                                                    (0.999, 0.99, 0.989, 0.008)])
def test_c10_coverage(verdict, coverage_report, alpha, level, target, tol):
    v = coverage_report.value("coverage", alpha=alpha, level=level)
    verdict(f"10 coverage alpha={alpha}, level={level}", abs(v - target) <= tol,
            f"{v:.4f} vs {target} +- {tol}")


@pytest.mark.slow
def test_c11_two_step_beta_coverage(verdict):
    cfg = McConfig(replications=1000, seed=11, beta=0.269, ns=(492,), alphas=(0.997,),
                   levels=(0.95,), beta_mode="cml", ci_grid_spacing=0.5, ci_draws=10_000)
    v = run_coverage(cfg).value("coverage", level=0.95)
    verdict("11 coverage with CML beta, beta=0.269, alpha=0.997, n=492", abs(v - 0.948) <= 0.03,
            f"{v:.4f} vs 0.948 +- 0.03")


# ---------------------------------------------------------------- application pipeline

PIPELINE = {"beta": None, "zeta": 0.05, "steps": 5000, "draws": 100_000, "seed": 12,
            "threads": 1, "table": None}


@pytest.mark.ukdata
@pytest.mark.slow
def test_c12_uk_application(verdict, uk_data_path):
    rep, _ = analyze(ingest_csv(uk_data_path), PIPELINE)
    checks = {
        "beta_hat": abs(rep["beta_hat"] - 0.269) <= 0.002,
        "alpha_hat": abs(rep["alpha_hat"] - 0.997) <= 0.001,
        "statistic": abs(rep["statistic"] + 1.257) <= 0.05,
        "p_value": abs(rep["p_value"] - 0.704) <= 0.02,
        "reject": rep["reject"] is False,
    }
    detail = ", ".join(f"{k}={rep[k]!r}" for k in checks)
    verdict("12 UK application", all(checks.values()), detail)


@pytest.mark.slow
def test_c12_synthetic_pipeline_reproducible(verdict):
    cfg = dict(PIPELINE, draws=20_000, steps=1000)
    runs = [analyze(ingest_csv(DATA / "synthetic_uk_like.csv"), cfg) for _ in range(2)]
    same = (json.dumps(runs[0][0]) == json.dumps(runs[1][0])
            and np.array_equal(runs[0][1], runs[1][1]))
    rep = runs[0][0]
    verdict("12 synthetic fixture pipeline completes and is bit-reproducible", same,
            f"beta_hat={rep['beta_hat']:.4f}, alpha_hat={rep['alpha_hat']:.5f}, "
            f"statistic={rep['statistic']:.3f}, p={rep['p_value']:.3f}")


# ---------------------------------------------------------------- engineering properties

def test_c13_parallel_determinism(verdict):
    base = dict(replications=400, seed=13, ns=(100,), limit_steps=500, limit_draws=4000,
                ci_steps=200, ci_draws=2000, alphas=(0.99, 0.9))
    same = True
    for runner in (run_size, run_power, run_coverage):
        a = runner(McConfig(parallelism=1, **base))
        b = runner(McConfig(parallelism=8, **base))
        same &= a.canonical_json() == b.canonical_json() and a.to_csv() == b.to_csv()
    verdict("13 reports identical at parallelism 1 and 8", same, "size, power, coverage")


def test_c14_table_round_trip_and_guard(verdict, tmp_path):
    dist = sample_limit(CirParams(1.0, 0.0, 500), 5000, RngStream(14))
    table = CriticalTable.from_distribution(dist)
    path = tmp_path / "d0.json"
    table.save(path)
    text = path.read_text()
    exact = CriticalTable.load(path).to_json() == text
    try:
        CriticalTable.load(path, beta=0.269)
        guarded = False
    except TableMismatchError:
        guarded = True
    verdict("14 table JSON round trip byte-exact, mismatch rejected", exact and guarded,
            f"round trip {'exact' if exact else 'differs'}, guard {'raised' if guarded else 'silent'}")
