"""
Confidence intervals and the unit-root test for the INARCH(1) coefficient.

Critical values and interval endpoints come from Monte Carlo samples of the
limit law, wrapped in :class:`EmpiricalDistribution`.  Quantiles use linear
interpolation between order statistics at 1-based rank ``(m - 1) p + 1``
(numpy's ``method="linear"``), so cached tables reproduce across tools.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm

from .estimate import cls_alpha
from .model import stationary_cls_avar
from .simulate import CountSeries

__all__ = [
    "EmpiricalDistribution",
    "CiResult",
    "UrtResult",
    "quantile",
    "ci_stationary",
    "ci_nearly_unstable",
    "unit_root_test",
]


class EmpiricalDistribution:
    """Sorted Monte Carlo sample with quantile and CDF views.

    Parameters
    ----------
    values : array_like
        Draws, in any order; stored sorted ascending.
    meta : dict, optional
        Provenance (``beta``, ``gamma``, ``steps``, ``draws``, ``seed``, ...).
    """

    def __init__(self, values, meta: dict | None = None):
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empirical distribution needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("empirical distribution values must be finite")
        v.setflags(write=False)
        self.values = v
        self.meta = dict(meta or {})

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, EmpiricalDistribution):
            return NotImplemented
        return self.meta == other.meta and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"EmpiricalDistribution(size={len(self)}, meta={self.meta})"

    def quantile(self, zeta):
        z = np.asarray(zeta, dtype=float)
        if np.any((z <= 0) | (z >= 1)) or np.any(np.isnan(z)):
            raise ValueError(f"quantile level must lie in (0, 1), got {zeta}")
        v = self.values
        h = (v.size - 1) * z
        lo = np.floor(h).astype(np.int64)
        hi = np.minimum(lo + 1, v.size - 1)
        q = v[lo] + (h - lo) * (v[hi] - v[lo])
        return float(q) if q.ndim == 0 else q

    def cdf(self, x):
        """Fraction of draws ``<= x``."""
        c = np.searchsorted(self.values, x, side="right") / self.values.size
        return float(c) if np.ndim(c) == 0 else c

    def interpolated_cdf(self, x):
        """Inverse of :meth:`quantile`: the level whose interpolated quantile is ``x``.

        Differs from :meth:`cdf` by at most ``1/len``; it is the p-value
        convention for which ``x < quantile(z)`` iff ``interpolated_cdf(x) < z``.
        """
        v = self.values
        m = v.size
        x = np.asarray(x, dtype=float)
        if m == 1:
            out = (x >= v[0]).astype(float)
        else:
            k = np.searchsorted(v, x, side="right")  # number of draws <= x
            kk = np.clip(k, 1, m - 1)
            lo, hi = v[kk - 1], v[kk]
            gap = hi - lo
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.where(gap > 0, (x - lo) / np.where(gap > 0, gap, 1.0), 0.0)
            out = np.where(k == 0, 0.0, np.where(k >= m, 1.0, (kk - 1 + frac) / (m - 1)))
        return float(out) if out.ndim == 0 else out

    def median(self) -> float:
        return self.quantile(0.5)


def quantile(dist: EmpiricalDistribution, zeta: float) -> float:
    """Order-statistic quantile with linear interpolation at rank ``(m-1) zeta + 1``."""
    return dist.quantile(zeta)


@dataclass(frozen=True)
class CiResult:
    lower: float
    upper: float
    level: float
    method: str
    alpha_hat: float = math.nan
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if self.lower > self.upper:
            raise ValueError("interval endpoints out of order")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class UrtResult:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    zeta: float
    alpha_hat: float = math.nan
    n: int = 0


def _check_level(level):
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")


def ci_stationary(
    series: CountSeries,
    beta: float,
    level: float = 0.95,
    avar: Callable[[float, float], float] = stationary_cls_avar,
) -> CiResult:
    """Normal-approximation interval ``alpha_hat -+ z sigma(beta, alpha_hat) / sqrt(n)``.

    ``avar`` maps ``(beta, alpha)`` to the asymptotic variance; it defaults
    to the closed form.  Pass
    :func:`nuinarch.model.cls_avar_from_moments` for the sandwich variance.
    """
    _check_level(level)
    fit = cls_alpha(series, beta)
    sigma = math.sqrt(avar(beta, fit.alpha_hat))
    half = norm.ppf((1 + level) / 2) * sigma / math.sqrt(fit.n)
    return CiResult(fit.alpha_hat - half, fit.alpha_hat + half, level, "stationary_normal", fit.alpha_hat)


def ci_nearly_unstable(
    series: CountSeries,
    beta: float,
    dist_provider: Callable[[float, float], EmpiricalDistribution],
    level: float = 0.95,
) -> CiResult:
    """Interval from the nearly unstable pivot ``n(alpha_hat - alpha)``.

    ``dist_provider(beta, gamma)`` must return a sample of the limit law at
    drift ``gamma``; it is called with the plug-in
    ``gamma_hat = max(0, n (1 - alpha_hat))``.  The interval is
    ``[alpha_hat - q_{(1+level)/2} / n, alpha_hat - q_{(1-level)/2} / n]``.
    """
    _check_level(level)
    fit = cls_alpha(series, beta)
    n = fit.n
    gamma_hat = max(0.0, n * (1 - fit.alpha_hat))
    dist = dist_provider(beta, gamma_hat)
    q_lo, q_hi = dist.quantile([(1 - level) / 2, (1 + level) / 2])
    return CiResult(
        fit.alpha_hat - q_hi / n,
        fit.alpha_hat - q_lo / n,
        level,
        "nearly_unstable",
        fit.alpha_hat,
        {"gamma_hat": gamma_hat, "q_lo": float(q_lo), "q_hi": float(q_hi)},
    )


def unit_root_test(series: CountSeries, beta: float, d0, zeta: float = 0.05) -> UrtResult:
    """Test ``alpha = 1`` against ``alpha < 1`` with statistic ``n(alpha_hat - 1)``.

    ``d0`` is a sample (or table) of the unit-root limit law at the same
    ``beta``; anything with ``quantile`` and ``interpolated_cdf`` works.
    The null is rejected when the statistic is strictly below the
    ``zeta``-quantile.
    """
    _check_level(zeta)
    fit = cls_alpha(series, beta)
    stat = fit.n * (fit.alpha_hat - 1)
    q = float(d0.quantile(zeta))
    p = float(d0.interpolated_cdf(stat))
    return UrtResult(stat, q, p, bool(stat < q), zeta, fit.alpha_hat, fit.n)
