"""
Monte Carlo experiments: interval coverage, test size and power, and the
standardised-estimate samples behind histogram/qq/density comparisons.

Replication ``r`` of a scenario draws from ``RngStream(seed, h ^ r)`` where
``h`` is a stable 64-bit hash of the scenario, so any subset of a grid can
be rerun on its own and the results do not depend on the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from .cir import LimitLawSampler, _resolve_threads
from .estimate import EstimationError, cls_alpha, cml_fit
from .infer import EmpiricalDistribution
from .model import InarchParams
from .simulate import RngStream, simulate_inarch

__all__ = [
    "McConfig",
    "ExperimentReport",
    "run_coverage",
    "run_size",
    "run_power",
    "standardized_estimates",
    "kde",
    "qq_pairs",
    "scenario_stream_id",
]


@dataclass
class McConfig:
    """Settings shared by the experiment runners.

    ``limit_*`` control the unit-root critical-value sample used by
    :func:`run_size`/:func:`run_power`; ``ci_*`` control the gridded
    limit-law sampler used by :func:`run_coverage`.
    """

    replications: int = 10_000
    seed: int = 0
    parallelism: int | str = 1
    beta: float = 1.0
    ns: tuple = (500,)
    alphas: tuple = (0.999, 0.99, 0.98, 0.9, 0.8, 0.7)
    levels: tuple = (0.90, 0.95, 0.99)
    zetas: tuple = (0.10, 0.05, 0.01)
    kappa: int = 0
    beta_mode: str = "fixed"
    limit_steps: int = 5000
    limit_draws: int = 100_000
    ci_steps: int = 1000
    ci_draws: int = 20_000
    ci_grid_spacing: float = 0.25
    ci_beta_ratio: float = 1.3

    def __post_init__(self):
        if int(self.replications) != self.replications or self.replications < 1:
            raise ValueError("replications must be a positive integer")
        if not self.ci_beta_ratio > 1:
            raise ValueError("ci_beta_ratio must exceed 1")
        if self.beta_mode not in ("fixed", "cml"):
            raise ValueError("beta_mode must be 'fixed' or 'cml'")
        self.ns = tuple(int(n) for n in np.atleast_1d(self.ns))
        self.alphas = tuple(float(a) for a in np.atleast_1d(self.alphas))
        self.levels = tuple(float(x) for x in np.atleast_1d(self.levels))
        self.zetas = tuple(float(x) for x in np.atleast_1d(self.zetas))

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("parallelism")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


@dataclass
class ExperimentReport:
    """One row per scenario and metric, plus metadata.

    Each row holds the scenario keys, ``metric``, ``value``, the count of
    usable ``replications`` and, for proportions, a 99% Wilson interval.
    ``metadata["runtime"]`` holds wall time and worker count; it is left out of
    :meth:`canonical_json` and the CSV, which are reproducible byte for byte.
    """

    kind: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("kind", "n", "alpha", "beta", "level", "zeta", "metric", "value",
               "replications", "wilson_low", "wilson_high")

    def value(self, metric: str, **scenario) -> float:
        hits = [r for r in self.rows if r["metric"] == metric
                and all(_close(r.get(k), v) for k, v in scenario.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {metric} {scenario}")
        return hits[0]["value"]

    def row(self, metric: str, **scenario) -> dict:
        hits = [r for r in self.rows if r["metric"] == metric
                and all(_close(r.get(k), v) for k, v in scenario.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {metric} {scenario}")
        return hits[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({c: _fmt(r.get(c, "")) for c in self.COLUMNS} | {"kind": self.kind})
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentReport":
        reader = csv.DictReader(io.StringIO(text))
        rows, kind = [], None
        for rec in reader:
            kind = rec.pop("kind")
            rows.append({k: _parse(v) for k, v in rec.items() if v != ""})
        return cls(kind or "", rows)

    def canonical_json(self) -> str:
        meta = {k: v for k, v in self.metadata.items() if k != "runtime"}
        return json.dumps({"kind": self.kind, "rows": self.rows, "metadata": meta}, indent=2) + "\n"

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "rows": self.rows, "metadata": self.metadata},
                          indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        d = json.loads(text)
        return cls(d["kind"], d["rows"], d.get("metadata", {}))


def _close(a, b):
    if a is None:
        return False
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)
    return a == b


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def _parse(s):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def scenario_stream_id(*key) -> int:
    """Stable 64-bit id of a scenario tuple (independent of ``PYTHONHASHSEED``)."""
    digest = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _replicate(fn, key: tuple, config: McConfig, width: int = 1) -> np.ndarray:
    reps = int(config.replications)
    base = scenario_stream_id(*key)
    out = np.full((reps, width), np.nan)

    def block(a, b):
        for r in range(a, b):
            out[r] = fn(RngStream(config.seed, base ^ r))

    workers = min(_resolve_threads(config.parallelism), reps)
    if workers == 1:
        block(0, reps)
    else:
        edges = np.linspace(0, reps, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            for f in [pool.submit(block, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]:
                f.result()
    return out if width > 1 else out[:, 0]


def _proportion_row(hits: np.ndarray, **keys) -> dict:
    ok = ~np.isnan(hits)
    m = int(ok.sum())
    k = int(hits[ok].sum())
    row = dict(keys)
    row.update(value=k / m if m else math.nan, replications=m)
    if m:
        ci = binomtest(k, m).proportion_ci(confidence_level=0.99, method="wilson")
        row.update(wilson_low=float(ci.low), wilson_high=float(ci.high))
    return row


def _unit_root_sampler(config: McConfig) -> LimitLawSampler:
    return LimitLawSampler(config.limit_steps, config.limit_draws, config.seed,
                           stream_id=scenario_stream_id("limit", "d0"),
                           threads=config.parallelism)


def _statistics(config: McConfig, n: int, alpha: float) -> np.ndarray:
    params = InarchParams(config.beta, alpha, config.kappa)

    def one(rng):
        series = simulate_inarch(params, n, rng)
        try:
            fit = cls_alpha(series, config.beta)
        except EstimationError:
            return math.nan
        return fit.n * (fit.alpha_hat - 1)

    return _replicate(one, ("urt", config.beta, alpha, n, config.kappa), config)


def _rejection_rows(config, d0, n, alpha, kind):
    stats = _statistics(config, n, alpha)
    rows = []
    for zeta in config.zetas:
        q = d0.quantile(zeta)
        hits = np.where(np.isnan(stats), np.nan, (stats < q).astype(float))
        rows.append(_proportion_row(hits, n=n, alpha=alpha, beta=config.beta, zeta=zeta,
                                    metric=kind))
    return rows


def _urt_report(config, kind, alphas, d0):
    t0 = time.perf_counter()
    d0 = d0 if d0 is not None else _unit_root_sampler(config)(config.beta, 0.0)
    rows = []
    for n in config.ns:
        for a in alphas:
            rows.extend(_rejection_rows(config, d0, n, a, kind))
    meta = {
        "config": config.echo(),
        "critical_values": {repr(z): float(d0.quantile(z)) for z in config.zetas},
        "d0": dict(d0.meta),
        "note": "one shared critical-value sample per report",
        "runtime": {"wall_seconds": time.perf_counter() - t0, "parallelism": config.parallelism},
    }
    return ExperimentReport(kind, rows, meta)


def run_size(config: McConfig, d0: EmpiricalDistribution | None = None) -> ExperimentReport:
    """Rejection rate of the unit-root test under ``alpha = 1`` for each ``n`` and ``zeta``."""
    return _urt_report(config, "size", (1.0,), d0)


def run_power(config: McConfig, d0: EmpiricalDistribution | None = None) -> ExperimentReport:
    """Rejection rate of the unit-root test for each ``n``, ``alpha < 1`` and ``zeta``."""
    if any(a >= 1 for a in config.alphas):
        raise ValueError("power scenarios need alpha < 1")
    return _urt_report(config, "power", config.alphas, d0)


def coverage_sampler(config: McConfig, gamma_max: float, beta_grid=None) -> LimitLawSampler:
    grid = LimitLawSampler.sqrt_grid(gamma_max, config.ci_grid_spacing)
    return LimitLawSampler(config.ci_steps, config.ci_draws, config.seed,
                           stream_id=scenario_stream_id("limit", "ci"),
                           gamma_grid=grid, beta_grid=beta_grid, threads=1)


def run_coverage(config: McConfig, sampler=None) -> ExperimentReport:
    """Share of nearly unstable intervals that contain the true ``alpha``.

    Each replication plugs ``gamma_hat = max(0, n(1 - alpha_hat))`` into a
    gridded limit-law sampler shared by the whole report.  With
    ``beta_mode="cml"`` the intercept is first estimated by joint conditional
    maximum likelihood and then treated as known, and the sampler is also
    gridded in ``beta``.
    """
    t0 = time.perf_counter()
    levels = np.asarray(config.levels)
    probs = np.concatenate([(1 - levels) / 2, (1 + levels) / 2])
    if sampler is None:
        gmax = max(n for n in config.ns)
        beta_grid = None
        if config.beta_mode == "cml":
            # geometric nodes from beta/20 to 20 beta
            r = config.ci_beta_ratio
            k = int(math.ceil(math.log(20) / math.log(r)))
            beta_grid = config.beta * r ** np.arange(-k, k + 1)
        sampler = coverage_sampler(config, gmax, beta_grid)
    rows = []
    for n in config.ns:
        for alpha in config.alphas:
            params = InarchParams(config.beta, alpha, config.kappa)

            def one(rng, n=n, alpha=alpha, params=params):
                series = simulate_inarch(params, n, rng)
                try:
                    beta = config.beta
                    if config.beta_mode == "cml":
                        beta = cml_fit(series, "joint").beta_hat
                    fit = cls_alpha(series, beta)
                except EstimationError:
                    return np.full(levels.size, np.nan)
                gamma_hat = max(0.0, fit.n * (1 - fit.alpha_hat))
                q = np.asarray(sampler(beta, gamma_hat).quantile(probs))
                lo = fit.alpha_hat - q[levels.size:] / fit.n
                hi = fit.alpha_hat - q[:levels.size] / fit.n
                return ((lo <= alpha) & (alpha <= hi)).astype(float)

            hits = _replicate(one, ("coverage", config.beta, alpha, n, config.kappa, config.beta_mode),
                              config, width=levels.size)
            if levels.size == 1:
                hits = hits[:, None]
            for j, level in enumerate(config.levels):
                rows.append(_proportion_row(hits[:, j], n=n, alpha=alpha, beta=config.beta,
                                            level=level, metric="coverage"))
    meta = {
        "config": config.echo(),
        "gamma_plugin": "max(0, n (1 - alpha_hat))",
        "sampler": repr(sampler),
        "note": "one shared gridded limit-law sampler per report",
        "runtime": {"wall_seconds": time.perf_counter() - t0, "parallelism": config.parallelism},
    }
    return ExperimentReport("coverage", rows, meta)


def standardized_estimates(config: McConfig, scaling: str = "n") -> np.ndarray:
    """``n (alpha_hat - alpha)`` or ``sqrt(n) (alpha_hat - alpha)``, one per replication.

    Uses the first entries of ``config.ns`` and ``config.alphas``.
    """
    if scaling not in ("n", "sqrt_n"):
        raise ValueError("scaling must be 'n' or 'sqrt_n'")
    n, alpha = config.ns[0], config.alphas[0]
    params = InarchParams(config.beta, alpha, config.kappa)

    def one(rng):
        series = simulate_inarch(params, n, rng)
        try:
            return cls_alpha(series, config.beta).alpha_hat
        except EstimationError:
            return math.nan

    est = _replicate(one, ("estimates", config.beta, alpha, n, config.kappa), config)
    scale = n if scaling == "n" else math.sqrt(n)
    return scale * (est - alpha)


def kde(sample, bandwidth="auto", grid_size: int = 512, grid=None):
    """Gaussian kernel density estimate on an even grid over ``[min - 3h, max + 3h]``.

    ``bandwidth="auto"`` is Silverman's rule ``1.06 sd m^(-1/5)``.
    Returns ``(grid, density)``.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if bandwidth == "auto":
        if x.size < 2:
            raise ValueError("automatic bandwidth needs at least two points")
        h = 1.06 * x.std(ddof=1) * x.size ** (-1 / 5)
    else:
        h = float(bandwidth)
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    if grid is None:
        grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, grid_size)
    grid = np.asarray(grid, dtype=float)
    dens = np.zeros(grid.size)
    chunk = max(1, 2_000_000 // max(grid.size, 1))
    for i in range(0, x.size, chunk):
        z = (grid[:, None] - x[None, i:i + chunk]) / h
        dens += np.exp(-0.5 * z * z).sum(axis=1)
    dens /= x.size * h * math.sqrt(2 * math.pi)
    return grid, dens


def qq_pairs(sample, reference) -> np.ndarray:
    """Rows ``(reference quantile at (i - 0.5)/m, i-th order statistic of sample)``."""
    s = np.sort(np.asarray(sample, dtype=float).ravel())
    if s.size == 0:
        raise ValueError("sample is empty")
    if not isinstance(reference, EmpiricalDistribution) and not hasattr(reference, "quantile"):
        reference = EmpiricalDistribution(reference)
    p = (np.arange(1, s.size + 1) - 0.5) / s.size
    return np.column_stack([reference.quantile(p), s])
