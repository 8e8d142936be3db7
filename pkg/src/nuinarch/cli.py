"""
Command-line interface.

    nuinarch simulate --beta 1 --alpha 0.99 --n 500 --seed 1 --out path.csv
    nuinarch analyze deaths.csv --zeta 0.05 --out report.json
    nuinarch tables --beta 1 --gamma 0 --draws 100000 --seed 3 --out d0.json
    nuinarch mc size --n 50,200,500 --zeta 0.1,0.05 --reps 10000 --seed 7 --out size.csv
    nuinarch kde sample.csv --out density.csv
    nuinarch qq sample.csv --reference d0.csv --out qq.csv

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import datetime as dt
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cir import CirParams, CriticalTable, DegeneratePathError, TableMismatchError, sample_limit
from .estimate import ConvergenceError, EstimationError, cls_alpha, cml_fit, predicted_means
from .harness import (
    ExperimentReport,
    McConfig,
    kde,
    qq_pairs,
    run_coverage,
    run_power,
    run_size,
    standardized_estimates,
)
from .infer import EmpiricalDistribution, unit_root_test
from .model import InarchParams, NearlyUnstableSpec
from .simulate import CountSeries, RngStream, simulate_inarch, simulate_nu_inarch

log = logging.getLogger("nuinarch")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

# beta given to `analyze` and the beta stored in a loaded table may differ by this much
TABLE_BETA_TOL = 5e-4


class DataError(ValueError):
    """Malformed input data or files."""


class UsageError(ValueError):
    """Inconsistent command-line settings."""


# ---------------------------------------------------------------- ingestion

@dataclass
class DatasetFile:
    path: Path
    series: CountSeries
    dates: list | None = None
    column: str = ""
    reversed: bool = False
    header: list = field(default_factory=list)


def _parse_count(text: str, row: int, column: str) -> int:
    s = text.strip()
    if not s:
        raise DataError(f"row {row}: empty value in column {column!r}")
    try:
        v = int(s)
    except ValueError:
        try:
            f = float(s)
        except ValueError:
            raise DataError(f"row {row}: {s!r} in column {column!r} is not a number") from None
        if not (math.isfinite(f) and f.is_integer()):
            raise DataError(f"row {row}: {s!r} in column {column!r} is not an integer count") from None
        v = int(f)
    if v < 0:
        raise DataError(f"row {row}: negative count {v} in column {column!r}")
    return v


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def ingest_csv(path, column: str | None = None, use_dates: bool = True) -> DatasetFile:
    """Read a count series from a CSV file with a header row.

    The count column is ``column`` if given, else one named ``count`` or
    ``deaths`` (any case), else the last column whose values are all numeric.
    A column named ``date`` is parsed as ISO-8601 and used to put the rows in
    chronological order.  Rows are ``X_1, ..., X_n`` unless a ``t`` column
    starts at 0, in which case the first row is the start value ``X_0``.
    Row numbers in errors count the header as row 1.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    records = [r for r in records if any(c.strip() for c in r)]
    if not records:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in records[0]]
    body = records[1:]
    if not body:
        raise DataError(f"{path} has a header but no data rows")
    for i, rec in enumerate(body, start=2):
        if len(rec) != len(header):
            raise DataError(f"row {i}: expected {len(header)} fields, found {len(rec)}")
    lower = [h.lower() for h in header]

    if column is not None:
        if column not in header:
            raise DataError(f"column {column!r} not found; available: {header}")
        ci = header.index(column)
    elif "count" in lower:
        ci = lower.index("count")
    elif "deaths" in lower:
        ci = lower.index("deaths")
    else:
        numeric = [j for j in range(len(header)) if all(_is_number(r[j]) for r in body)]
        if not numeric:
            raise DataError(f"{path}: no numeric column found")
        ci = numeric[-1]
    counts = [_parse_count(r[ci], i, header[ci]) for i, r in enumerate(body, start=2)]

    dates = None
    flipped = False
    if use_dates and "date" in lower:
        di = lower.index("date")
        dates = []
        for i, r in enumerate(body, start=2):
            try:
                dates.append(dt.date.fromisoformat(r[di].strip()))
            except ValueError:
                raise DataError(f"row {i}: {r[di]!r} is not an ISO-8601 date (use --no-date)") from None
        if len(dates) > 1 and all(a > b for a, b in zip(dates, dates[1:])):
            dates.reverse()
            counts.reverse()
            flipped = True
        elif not all(a < b for a, b in zip(dates, dates[1:])):
            raise DataError(f"{path}: dates are neither strictly increasing nor decreasing")
    if len(counts) < 3:
        raise DataError(f"{path}: need at least 3 observations, found {len(counts)}")
    # a ``t`` column starting at 0 marks the first row as the start value X_0
    origin = 1
    if "t" in lower and not flipped:
        first = body[0][lower.index("t")].strip()
        if _is_number(first) and float(first) == 0:
            origin = 0
    series = CountSeries(np.array(counts, dtype=np.int64), origin=origin, meta={"source": str(path)})
    return DatasetFile(path, series, dates, header[ci], flipped, header)


@contextlib.contextmanager
def _sink(path):
    """Open ``path`` for writing, or yield stdout when it is ``None``."""
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def write_series_csv(path, series: CountSeries, dates=None) -> None:
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        if dates is None:
            w.writerow(["t", "count"])
            for t, v in enumerate(series.values, start=series.origin):
                w.writerow([t, int(v)])
        else:
            w.writerow(["date", "count"])
            for d, v in zip(dates, series.values):
                w.writerow([d.isoformat(), int(v)])


def read_sample_csv(path, column: str | None = None) -> np.ndarray:
    """Numeric column of a CSV (``value`` if present, else the last numeric column)."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    if len(rows) < 2:
        raise DataError(f"{path} has no data rows")
    header, body = rows[0], rows[1:]
    if column is None:
        if "value" in header:
            column = "value"
        else:
            numeric = [h for j, h in enumerate(header) if all(_is_number(r[j]) for r in body)]
            if not numeric:
                raise DataError(f"{path}: no numeric column")
            column = numeric[-1]
    if column not in header:
        raise DataError(f"{path}: column {column!r} not found")
    j = header.index(column)
    try:
        return np.array([float(r[j]) for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_columns_csv(path, names, *cols) -> None:
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from exc


# ---------------------------------------------------------------- configuration

DEFAULTS = {
    "beta": None,
    "alpha": None,
    "gamma": None,
    "n": None,
    "kappa": 0,
    "zeta": 0.05,
    "level": 0.95,
    "steps": 5000,
    "draws": 100_000,
    "reps": 10_000,
    "seed": 0,
    "threads": 1,
    "column": None,
    "table": None,
    "out": None,
    "no_date": False,
    "bandwidth": "auto",
    "grid": 512,
    "scaling": "n",
    "reference": None,
}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _threads(text: str):
    if text == "auto":
        return "auto"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--threads takes a positive integer or 'auto'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("--threads must be positive")
    return v


def _add_common(p, *names):
    spec = {
        "beta": (_floats, "intercept beta (comma list allowed for mc)"),
        "alpha": (_floats, "coefficient alpha (comma list allowed for mc)"),
        "gamma": (float, "drift gamma; alpha = 1 - gamma/n"),
        "n": (_ints, "sample size (comma list allowed for mc)"),
        "kappa": (int, "starting value X_0"),
        "zeta": (_floats, "test level(s)"),
        "level": (_floats, "confidence level(s)"),
        "steps": (int, "Riemann grid size M on [0, 1]"),
        "draws": (int, "limit-law Monte Carlo draws"),
        "reps": (int, "Monte Carlo replications"),
        "seed": (int, "64-bit seed"),
        "threads": (_threads, "worker threads or 'auto'"),
        "column": (str, "count column of the dataset"),
        "table": (str, "critical-value table JSON to load"),
        "out": (str, "output path"),
        "config": (str, "JSON config file (flags override it)"),
        "reference": (str, "reference sample CSV or table JSON"),
        "bandwidth": (str, "KDE bandwidth or 'auto'"),
        "grid": (int, "KDE grid points"),
    }
    for name in names:
        typ, help_ = spec[name]
        p.add_argument(f"--{name}", type=typ, default=None, help=help_)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nuinarch", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an INARCH(1) path to CSV")
    _add_common(p, "beta", "alpha", "gamma", "n", "kappa", "seed", "out", "config")

    for name in ("analyze", "urtest"):
        p = sub.add_parser(name, help="fit and test a count series (urtest is an alias)")
        p.add_argument("dataset")
        _add_common(p, "beta", "zeta", "steps", "draws", "seed", "threads", "column", "table",
                    "out", "config")
        p.add_argument("--no-date", action="store_true", default=None)

    p = sub.add_parser("tables", help="build a critical-value table")
    _add_common(p, "beta", "gamma", "steps", "draws", "seed", "threads", "out", "config")

    p = sub.add_parser("mc", help="Monte Carlo experiments")
    p.add_argument("experiment", choices=["coverage", "size", "power", "standardized"])
    _add_common(p, "beta", "alpha", "n", "kappa", "zeta", "level", "steps", "draws", "reps",
                "seed", "threads", "out", "config")
    p.add_argument("--scaling", choices=["n", "sqrt_n"], default=None)
    p.add_argument("--beta-mode", dest="beta_mode", choices=["fixed", "cml"], default=None)

    p = sub.add_parser("kde", help="Gaussian kernel density of a sample CSV")
    p.add_argument("sample")
    _add_common(p, "bandwidth", "grid", "out", "config")

    p = sub.add_parser("qq", help="qq pairs of a sample against a reference")
    p.add_argument("sample")
    _add_common(p, "reference", "out", "config")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"config {args.config} is not valid JSON: {exc}") from exc
        unknown = set(file_cfg) - set(DEFAULTS) - {"beta_mode"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    return cfg


def _scalar(cfg, key, required=False):
    v = cfg.get(key)
    if isinstance(v, (list, tuple)):
        if len(v) != 1:
            raise UsageError(f"--{key} takes a single value here")
        v = v[0]
    if v is None and required:
        raise UsageError(f"--{key} is required")
    return v


def _list(cfg, key):
    v = cfg.get(key)
    if v is None:
        return None
    return list(v) if isinstance(v, (list, tuple)) else [v]


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg) -> int:
    beta = float(_scalar(cfg, "beta", required=True))
    n = int(_scalar(cfg, "n", required=True))
    alpha, gamma = _scalar(cfg, "alpha"), _scalar(cfg, "gamma")
    if (alpha is None) == (gamma is None):
        raise UsageError("give exactly one of --alpha and --gamma")
    rng = RngStream(int(cfg["seed"]))
    kappa = int(cfg["kappa"])
    if gamma is not None:
        series = simulate_nu_inarch(NearlyUnstableSpec(beta, float(gamma), n), kappa, rng)
    else:
        series = simulate_inarch(InarchParams(beta, float(alpha), kappa), n, rng)
    write_series_csv(cfg.get("out"), series)
    return EXIT_OK


def _d0_for(cfg, beta: float):
    if cfg.get("table"):
        table = CriticalTable.load(cfg["table"], gamma=0.0)
        if abs(table.beta - beta) > TABLE_BETA_TOL:
            raise TableMismatchError(
                f"table {cfg['table']} was built for beta={table.beta}, analysis uses beta={beta:.6g}"
            )
        return table, {"source": str(cfg["table"]), "beta": table.beta, "steps": table.steps,
                       "draws": table.draws, "seed": table.seed}
    params = CirParams(beta, 0.0, int(cfg["steps"]))
    dist = sample_limit(params, int(cfg["draws"]), RngStream(int(cfg["seed"])), threads=cfg["threads"])
    return dist, {"source": "simulated", **dist.meta}


def analyze(dataset: DatasetFile, cfg) -> tuple[dict, np.ndarray]:
    """Two-step analysis: beta by CML (unless fixed), alpha by CLS, unit-root test."""
    series = dataset.series
    beta_fixed = _scalar(cfg, "beta")
    if beta_fixed is None:
        fit = cml_fit(series, "joint")
        beta, beta_source = fit.beta_hat, "cml_joint"
    else:
        beta, beta_source = float(beta_fixed), "fixed"
    zeta = float(_scalar(cfg, "zeta"))
    cls = cls_alpha(series, beta)
    d0, d0_meta = _d0_for(cfg, beta)
    urt = unit_root_test(series, beta, d0, zeta)
    preds = predicted_means(series, beta, cls.alpha_hat)
    report = {
        "dataset": str(dataset.path),
        "column": dataset.column,
        "observations": len(series),
        "n": cls.n,
        "beta_hat": beta,
        "beta_source": beta_source,
        "alpha_hat": cls.alpha_hat,
        "statistic": urt.statistic,
        "zeta": zeta,
        "q_zeta": urt.critical_value,
        "p_value": urt.p_value,
        "reject": urt.reject,
        "d0": d0_meta,
    }
    return report, preds


def cmd_analyze(cfg) -> int:
    dataset = ingest_csv(cfg["dataset"], cfg.get("column"), use_dates=not cfg.get("no_date"))
    report, preds = analyze(dataset, cfg)
    text = json.dumps(report, indent=2) + "\n"
    out = cfg.get("out")
    if out:
        _write_text(out, text)
        pred_path = Path(out).with_name(Path(out).stem + "_predictions.csv")
        obs = dataset.series.values[1:]
        idx = ([d.isoformat() for d in dataset.dates[1:]] if dataset.dates
               else list(range(dataset.series.origin + 1, dataset.series.n + 1)))
        write_columns_csv(pred_path, ["date" if dataset.dates else "t", "observed", "predicted"],
                          idx, obs.tolist(), preds)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_tables(cfg) -> int:
    beta = float(_scalar(cfg, "beta", required=True))
    gamma = float(_scalar(cfg, "gamma") or 0.0)
    out = cfg.get("out")
    if not out:
        raise UsageError("--out is required for tables")
    dist = sample_limit(CirParams(beta, gamma, int(cfg["steps"])), int(cfg["draws"]),
                        RngStream(int(cfg["seed"])), threads=cfg["threads"])
    table = CriticalTable.from_distribution(dist)
    _write_text(out, table.to_json())
    log.info("wrote %s (q_0.05 = %.4f)", out, table.quantile(0.05))
    return EXIT_OK


def cmd_mc(cfg) -> int:
    exp = cfg["experiment"]
    betas = _list(cfg, "beta") or [1.0]
    if len(betas) != 1:
        raise UsageError("mc takes one --beta")
    kwargs = dict(
        replications=int(cfg["reps"]),
        seed=int(cfg["seed"]),
        parallelism=cfg["threads"],
        beta=float(betas[0]),
        kappa=int(cfg["kappa"]),
        limit_steps=int(cfg["steps"]),
        limit_draws=int(cfg["draws"]),
        beta_mode=cfg.get("beta_mode") or "fixed",
    )
    if _list(cfg, "n"):
        kwargs["ns"] = tuple(_list(cfg, "n"))
    if _list(cfg, "alpha"):
        kwargs["alphas"] = tuple(_list(cfg, "alpha"))
    if cfg.get("zeta") is not None:
        kwargs["zetas"] = tuple(_list(cfg, "zeta"))
    if _list(cfg, "level") and exp == "coverage" and isinstance(cfg.get("level"), list):
        kwargs["levels"] = tuple(_list(cfg, "level"))
    config = McConfig(**kwargs)
    out = cfg.get("out")
    if exp == "standardized":
        est = standardized_estimates(config, cfg.get("scaling") or "n")
        write_columns_csv(out, ["replication", "value"], range(est.size), est)
        return EXIT_OK
    runner = {"coverage": run_coverage, "size": run_size, "power": run_power}[exp]
    report: ExperimentReport = runner(config)
    if out:
        _write_text(out, report.to_csv())
        _write_text(Path(out).with_suffix(".json"), report.to_json())
    else:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def cmd_kde(cfg) -> int:
    x = read_sample_csv(cfg["sample"])
    bw = cfg.get("bandwidth", "auto")
    bw = bw if bw == "auto" else float(bw)
    grid, dens = kde(x, bw, int(cfg["grid"]))
    write_columns_csv(cfg.get("out"), ["x", "density"], grid, dens)
    return EXIT_OK


def cmd_qq(cfg) -> int:
    x = read_sample_csv(cfg["sample"])
    ref_path = cfg.get("reference")
    if not ref_path:
        raise UsageError("--reference is required")
    if str(ref_path).endswith(".json"):
        table = CriticalTable.load(ref_path)
        z = np.array(sorted(float(k) for k in table.quantiles))
        p = np.clip((np.arange(1, x.size + 1) - 0.5) / x.size, z[0], z[-1])
        pairs = np.column_stack([table.quantile(p), np.sort(x)])
    else:
        pairs = qq_pairs(x, EmpiricalDistribution(read_sample_csv(ref_path)))
    write_columns_csv(cfg.get("out"), ["reference", "sample"], pairs[:, 0], pairs[:, 1])
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "urtest": cmd_analyze,
    "tables": cmd_tables,
    "mc": cmd_mc,
    "kde": cmd_kde,
    "qq": cmd_qq,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, TableMismatchError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EstimationError, ConvergenceError, DegeneratePathError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
