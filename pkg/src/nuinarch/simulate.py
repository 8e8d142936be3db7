"""
Reproducible simulation of Poisson INARCH(1) and nearly unstable paths.

Random numbers come from :class:`RngStream`, a ``(seed, stream_id)`` pair
mapped to an independent PCG64 stream through ``numpy.random.SeedSequence``.
Streams never need to coordinate, so replications can be farmed out to any
number of workers and still reproduce bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .model import InarchParams, NearlyUnstableSpec

__all__ = [
    "RngStream",
    "CountSeries",
    "StepPath",
    "poisson_draw",
    "simulate_inarch",
    "simulate_nu_inarch",
    "normalize_path",
]

_U64 = 2**64


class RngStream:
    """A single-owner random stream identified by ``(seed, stream_id)``.

    ``child(i)`` derives a further independent stream, used when one
    logical stream fans out into many paths (one per Monte Carlo draw).
    The underlying generator is created lazily and advances as it is used.
    """

    __slots__ = ("seed", "stream_id", "path", "_gen")

    def __init__(self, seed: int, stream_id: int = 0, path: tuple = ()):
        for name, v in (("seed", seed), ("stream_id", stream_id)):
            if int(v) != v or not 0 <= v < _U64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(int(p) for p in path)
        self._gen = None

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(index),))

    def __repr__(self):
        extra = f", path={self.path}" if self.path else ""
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}{extra})"


@dataclass
class CountSeries:
    """A trajectory of non-negative counts.

    ``values[0]`` carries time index ``origin``.  Simulated series start at the
    deterministic ``X_0`` (``origin=0``); observed data usually start at
    ``X_1`` (``origin=1``).  The last time index, ``n``, is the scaling index
    used by the estimators and tests.
    """

    values: np.ndarray
    params_used: InarchParams | None = None
    origin: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1:
            raise ValueError("count series must be one-dimensional")
        if v.dtype.kind == "f":
            if not np.all(np.isfinite(v)) or np.any(v != np.round(v)):
                raise ValueError("counts must be integral")
        elif v.dtype.kind not in "iu" and v.size:
            raise ValueError(f"counts must be integers, got dtype {v.dtype}")
        v = v.astype(np.int64)
        if np.any(v < 0):
            raise ValueError("counts must be non-negative")
        if self.origin not in (0, 1):
            raise ValueError("origin must be 0 or 1")
        self.values = v

    def __len__(self):
        return len(self.values)

    @property
    def n(self) -> int:
        """Time index of the last observation."""
        return len(self.values) - 1 + self.origin

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Predictor/response pairs ``(X_{t-1}, X_t)`` for ``t = 2..n``."""
        skip = 1 - self.origin
        x = self.values[skip:]
        return x[:-1], x[1:]


@dataclass(frozen=True)
class StepPath:
    """Piecewise-constant normalised path ``t -> X_{floor(n t)} / n`` on [0, 1]."""

    grid: np.ndarray
    values: np.ndarray
    n: int
    counts: np.ndarray = field(repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > 1)):
            raise ValueError("path is defined on [0, 1]")
        # rounding guard so that t = k/n maps to index k, not k-1
        idx = np.floor(np.round(self.n * t, 9)).astype(np.int64)
        return self.counts[idx] / self.n


def poisson_draw(lam: float, rng: RngStream) -> int:
    """One exact Poisson(lam) variate from ``rng``.

    Small means use sequential inversion; means of 10 and above use the
    transformed-rejection method with squeeze (numpy's PTRS), which is
    exact and stays O(1) for means of order 1e9 and beyond.
    """
    lam = float(lam)
    if math.isnan(lam) or lam < 0 or math.isinf(lam):
        raise ValueError(f"Poisson mean must be finite and non-negative, got {lam}")
    if lam == 0:
        return 0
    return int(rng.generator.poisson(lam))


def simulate_inarch(params: InarchParams, n: int, rng: RngStream) -> CountSeries:
    """Simulate ``X_0 = kappa, X_1, ..., X_n`` with ``X_t ~ Poisson(beta + alpha X_{t-1})``."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    values = _kernels.inarch_path(
        rng.generator, float(params.beta), float(params.alpha), int(params.kappa), int(n)
    )
    return CountSeries(values, params_used=params)


def simulate_nu_inarch(spec: NearlyUnstableSpec, kappa: int, rng: RngStream) -> CountSeries:
    """Simulate a nearly unstable path of length ``spec.n`` with ``alpha_n = 1 - gamma/n``."""
    if spec.gamma > spec.n:
        raise ValueError(f"gamma={spec.gamma} exceeds n={spec.n}")
    return simulate_inarch(spec.params(kappa), spec.n, rng)


def normalize_path(series: CountSeries, grid=None) -> StepPath:
    """Normalised step path ``X_{floor(n t)} / n``.

    The default grid is the jump set ``{0, 1/n, ..., 1}``.  A series with
    ``origin=1`` has no ``X_0``; it is treated as starting from zero.
    """
    counts = series.values
    if series.origin == 1:
        counts = np.concatenate([[0], counts])
    n = len(counts) - 1
    if n < 1:
        raise ValueError("need at least two values to normalise")
    if grid is None:
        grid = np.arange(n + 1) / n
    grid = np.asarray(grid, dtype=float)
    path = StepPath(grid=grid, values=np.empty(0), n=n, counts=counts)
    return StepPath(grid=grid, values=path(grid), n=n, counts=counts)
