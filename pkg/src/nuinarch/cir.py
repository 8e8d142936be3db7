"""
CIR diffusion paths and Monte Carlo draws of the CLS limit law.

The limit of ``n (alpha_hat - alpha_n)`` is

    D_gamma = int_0^1 X^{3/2} dB / int_0^1 X^2 dt,
    dX = (beta - gamma X) dt + sqrt(X) dB,  X(0) = 0.

Paths use Euler-Maruyama with full truncation; the stochastic integral is
the left-point (Itô) sum against the *same* Brownian increments that drive
the path, and the time integral a left Riemann sum.
"""
from __future__ import annotations

import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .infer import EmpiricalDistribution
from .simulate import RngStream

__all__ = [
    "CirParams",
    "CirPath",
    "DegeneratePathError",
    "simulate_cir",
    "limit_functional",
    "sample_limit",
    "LimitLawSampler",
    "InterpolatedLaw",
    "CriticalTable",
    "TableMismatchError",
    "DEFAULT_LEVELS",
]

DEFAULT_STEPS = 5000
DEFAULT_DRAWS = 100_000


class DegeneratePathError(ValueError):
    """The path is identically zero, so the limit ratio is undefined."""


@dataclass(frozen=True)
class CirParams:
    beta: float
    gamma: float = 0.0
    steps: int = DEFAULT_STEPS
    x0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if int(self.steps) != self.steps or self.steps < 2:
            raise ValueError(f"steps must be an integer >= 2, got {self.steps}")
        if not (math.isfinite(self.x0) and self.x0 >= 0):
            raise ValueError(f"x0 must be non-negative, got {self.x0}")
        object.__setattr__(self, "steps", int(self.steps))


@dataclass(frozen=True)
class CirPath:
    """Grid values ``X_0..X_M`` at ``t_i = i/M`` and the increments ``dB_i`` that drove them."""

    values: np.ndarray
    increments: np.ndarray
    params: CirParams | None = None

    def __post_init__(self):
        if self.values.shape[0] != self.increments.shape[0] + 1:
            raise ValueError("need exactly one increment per grid step")

    @property
    def steps(self) -> int:
        return self.increments.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) / self.steps


def simulate_cir(params: CirParams, rng: RngStream) -> CirPath:
    """Full-truncation Euler path of the CIR diffusion on [0, 1]."""
    xs, dbs = _kernels.cir_path(
        rng.generator, float(params.beta), float(params.gamma), params.steps, float(params.x0)
    )
    return CirPath(xs, dbs, params)


def limit_functional(path: CirPath) -> float:
    """``sum X_i^{3/2} dB_i / sum X_i^2 dt`` over the left grid points."""
    num, den = _kernels.ito_sums(
        np.ascontiguousarray(path.values, dtype=float),
        np.ascontiguousarray(path.increments, dtype=float),
        1.0 / path.steps,
    )
    if den == 0:
        raise DegeneratePathError("path is identically zero; denominator vanishes")
    return num / den


def _draw_block(params: CirParams, rng: RngStream, start: int, stop: int, out: np.ndarray):
    b, g, m, x0 = float(params.beta), float(params.gamma), params.steps, float(params.x0)
    for i in range(start, stop):
        num, den = _kernels.cir_functional(rng.child(i).generator, b, g, m, x0)
        if den == 0:
            raise DegeneratePathError(f"draw {i} produced an all-zero path")
        out[i] = num / den


def _resolve_threads(threads) -> int:
    if threads in (None, "auto", 0):
        return os.cpu_count() or 1
    return max(1, int(threads))


def sample_limit(
    params: CirParams, draws: int = DEFAULT_DRAWS, rng: RngStream | None = None, threads=1
) -> EmpiricalDistribution:
    """Independent draws of ``D_gamma``, one fresh path per draw.

    Draw ``i`` uses the stream ``rng.child(i)``, so the result does not depend
    on ``threads``.
    """
    if int(draws) != draws or draws < 1:
        raise ValueError(f"draws must be a positive integer, got {draws}")
    draws = int(draws)
    rng = rng if rng is not None else RngStream(0)
    out = np.empty(draws)
    workers = min(_resolve_threads(threads), draws)
    if workers == 1:
        _draw_block(params, rng, 0, draws, out)
    else:
        edges = np.linspace(0, draws, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            futures = [
                pool.submit(_draw_block, params, rng, int(a), int(b), out)
                for a, b in zip(edges[:-1], edges[1:])
            ]
            for f in futures:
                f.result()
    meta = {
        "beta": float(params.beta),
        "gamma": float(params.gamma),
        "steps": params.steps,
        "draws": draws,
        "seed": rng.seed,
        "stream_id": rng.stream_id,
    }
    if params.x0:
        meta["x0"] = float(params.x0)
    return EmpiricalDistribution(out, meta)


def _bracket(grid: np.ndarray, x: float) -> tuple[int, int, float]:
    if x <= grid[0]:
        return 0, 0, 0.0
    if x >= grid[-1]:
        k = len(grid) - 1
        return k, k, 0.0
    k = int(np.searchsorted(grid, x, side="right")) - 1
    w = (x - grid[k]) / (grid[k + 1] - grid[k])
    return k, k + 1, float(w)


class LimitLawSampler:
    """Cached provider of limit-law samples, callable as ``sampler(beta, gamma)``.

    Without grids every distinct ``(beta, gamma)`` gets its own exact sample.
    With ``gamma_grid`` and/or ``beta_grid`` the sampler builds samples only
    at grid nodes (lazily, all from the same seed so neighbouring nodes share
    their Brownian noise) and returns the quantile-function interpolation
    between the bracketing nodes.  Requests outside a grid are clamped to its
    end nodes.

    Instances are safe to share between threads once a node is built; node
    construction itself is serialised.
    """

    def __init__(self, steps: int = DEFAULT_STEPS, draws: int = DEFAULT_DRAWS, seed: int = 0,
                 stream_id: int = 0, gamma_grid=None, beta_grid=None, threads=1):
        self.steps = int(steps)
        self.draws = int(draws)
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.gamma_grid = None if gamma_grid is None else np.unique(np.asarray(gamma_grid, float))
        self.beta_grid = None if beta_grid is None else np.unique(np.asarray(beta_grid, float))
        self.threads = threads
        self._cache: dict[tuple[float, float], EmpiricalDistribution] = {}
        self._lock = threading.Lock()

    @staticmethod
    def sqrt_grid(gamma_max: float, spacing: float = 0.25) -> np.ndarray:
        """Nodes evenly spaced in ``sqrt(gamma)``: ``(k * spacing)**2`` up to ``gamma_max``."""
        kmax = int(math.ceil(math.sqrt(max(gamma_max, 0.0)) / spacing)) + 1
        return (np.arange(kmax + 1) * spacing) ** 2

    def exact(self, beta: float, gamma: float) -> EmpiricalDistribution:
        key = (float(beta), float(gamma))
        with self._lock:
            dist = self._cache.get(key)
            if dist is None:
                dist = sample_limit(CirParams(beta, gamma, self.steps), self.draws,
                                    RngStream(self.seed, self.stream_id), threads=self.threads)
                self._cache[key] = dist
        return dist

    def __call__(self, beta: float, gamma: float):
        gamma = max(0.0, float(gamma))
        if self.gamma_grid is None and self.beta_grid is None:
            return self.exact(beta, gamma)
        if self.beta_grid is None:
            b_nodes = [(float(beta), 1.0)]
        else:
            i, j, w = _bracket(self.beta_grid, beta)
            b_nodes = [(self.beta_grid[i], 1 - w), (self.beta_grid[j], w)]
        if self.gamma_grid is None:
            g_nodes = [(gamma, 1.0)]
        else:
            i, j, w = _bracket(self.gamma_grid, gamma)
            g_nodes = [(self.gamma_grid[i], 1 - w), (self.gamma_grid[j], w)]
        nodes = [(self.exact(b, g), wb * wg) for b, wb in b_nodes for g, wg in g_nodes if wb * wg > 0]
        meta = {"beta": float(beta), "gamma": gamma, "steps": self.steps, "draws": self.draws,
                "seed": self.seed, "interpolated": True}
        return InterpolatedLaw(nodes, meta)

    def __repr__(self):
        return (f"LimitLawSampler(steps={self.steps}, draws={self.draws}, seed={self.seed}, "
                f"nodes_built={len(self._cache)})")


class InterpolatedLaw:
    """Weighted quantile-function mixture of node samples of equal size.

    Linear order-statistic quantiles are linear in the sorted sample, so the
    quantile of the mixture is the weighted sum of node quantiles; this is
    computed without materialising the mixed sample.
    """

    def __init__(self, nodes, meta):
        self.nodes = nodes
        self.meta = meta
        self._dist = None

    def quantile(self, zeta):
        if len(self.nodes) == 1:
            return self.nodes[0][0].quantile(zeta)
        q = sum(w * np.asarray(d.quantile(zeta)) for d, w in self.nodes)
        return float(q) if np.ndim(q) == 0 else q

    def to_distribution(self) -> EmpiricalDistribution:
        if self._dist is None:
            mixed = sum(w * d.values for d, w in self.nodes)
            self._dist = EmpiricalDistribution(mixed, self.meta)
        return self._dist

    @property
    def values(self):
        return self.to_distribution().values

    def cdf(self, x):
        return self.to_distribution().cdf(x)

    def interpolated_cdf(self, x):
        return self.to_distribution().interpolated_cdf(x)

    def __len__(self):
        return len(self.nodes[0][0])


DEFAULT_LEVELS = tuple(round(k / 1000, 3) for k in range(1, 1000))


class TableMismatchError(ValueError):
    """A stored critical-value table does not match the requested setting."""


@dataclass
class CriticalTable:
    """Quantiles of a limit-law sample with full provenance, stored as JSON.

    ``quantiles`` maps the level, written as a decimal string, to its value.
    """

    beta: float
    gamma: float
    steps: int
    draws: int
    seed: int
    quantiles: dict = field(default_factory=dict)

    @classmethod
    def from_distribution(cls, dist: EmpiricalDistribution, levels=DEFAULT_LEVELS) -> "CriticalTable":
        levels = sorted(set(float(z) for z in levels))
        qs = dist.quantile(levels)
        m = dist.meta
        return cls(float(m["beta"]), float(m["gamma"]), int(m["steps"]), int(m["draws"]),
                   int(m["seed"]), {repr(z): float(q) for z, q in zip(levels, np.atleast_1d(qs))})

    def _arrays(self):
        z = np.array([float(k) for k in self.quantiles])
        q = np.array(list(self.quantiles.values()), dtype=float)
        order = np.argsort(z)
        return z[order], q[order]

    def quantile(self, zeta):
        """Stored value when ``zeta`` is a stored level, else linear interpolation in level."""
        z, q = self._arrays()
        zeta_arr = np.asarray(zeta, dtype=float)
        if np.any((zeta_arr < z[0]) | (zeta_arr > z[-1])):
            raise ValueError(f"level {zeta} outside the tabulated range [{z[0]}, {z[-1]}]")
        out = np.interp(zeta_arr, z, q)
        return float(out) if out.ndim == 0 else out

    def interpolated_cdf(self, x):
        """Level at which the tabulated quantile curve reaches ``x`` (clamped to the table range)."""
        z, q = self._arrays()
        # np.interp needs increasing abscissae; ties in q are harmless here
        out = np.interp(x, q, z, left=0.0, right=1.0)
        return float(out) if np.ndim(out) == 0 else out

    cdf = interpolated_cdf

    def to_json(self) -> str:
        payload = {
            "beta": self.beta,
            "gamma": self.gamma,
            "steps": self.steps,
            "draws": self.draws,
            "seed": self.seed,
            "quantiles": self.quantiles,
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CriticalTable":
        d = json.loads(text)
        missing = {"beta", "gamma", "steps", "draws", "seed", "quantiles"} - d.keys()
        if missing:
            raise ValueError(f"critical-value table lacks fields {sorted(missing)}")
        return cls(d["beta"], d["gamma"], d["steps"], d["draws"], d["seed"], dict(d["quantiles"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path, **expected) -> "CriticalTable":
        """Read a table and check any provenance fields given as keywords."""
        with open(path, encoding="utf-8") as fh:
            table = cls.from_json(fh.read())
        table.check(**expected)
        return table

    def check(self, **expected) -> None:
        for key, want in expected.items():
            if want is None:
                continue
            have = getattr(self, key)
            if isinstance(have, float) or isinstance(want, float):
                same = math.isclose(float(have), float(want), rel_tol=1e-12, abs_tol=1e-12)
            else:
                same = have == want
            if not same:
                raise TableMismatchError(f"table has {key}={have!r}, requested {want!r}")
