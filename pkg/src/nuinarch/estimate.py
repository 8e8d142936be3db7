"""
Point estimation for INARCH(1): closed-form conditional least squares for
``alpha`` and conditional maximum likelihood for ``(beta, alpha)``.

All estimators use the pairs ``(X_{t-1}, X_t)`` for ``t = 2..n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .simulate import CountSeries

__all__ = [
    "ClsFit",
    "CmlFit",
    "EstimationError",
    "ConvergenceError",
    "cls_alpha",
    "cml_fit",
    "loglik",
    "predicted_means",
]

_TINY = 1e-300


class EstimationError(ValueError):
    """Raised when the data cannot identify the requested estimate."""


class ConvergenceError(RuntimeError):
    """Raised when an optimiser misses its tolerance within its budget."""


@dataclass(frozen=True)
class ClsFit:
    alpha_hat: float
    n: int
    beta_assumed: float


@dataclass(frozen=True)
class CmlFit:
    beta_hat: float
    alpha_hat: float
    loglik: float
    mode: str = "joint"


def cls_alpha(series: CountSeries, beta: float) -> ClsFit:
    """Conditional least squares estimate of ``alpha`` with ``beta`` known.

    ``sum X_{t-1} (X_t - beta) / sum X_{t-1}^2`` over ``t = 2..n``.
    """
    x_prev, x_next = series.pairs()
    if x_prev.size < 1 or len(series) < 2:
        raise EstimationError("need at least three time points for CLS")
    x_prev = x_prev.astype(float)
    den = np.dot(x_prev, x_prev)
    if den == 0:
        raise EstimationError("all predictors X_{t-1} are zero; alpha is not identified")
    num = np.dot(x_prev, x_next - beta)
    return ClsFit(float(num / den), series.n, float(beta))


def loglik(series: CountSeries, beta: float, alpha: float) -> float:
    """Poisson conditional log-likelihood ``sum (X_t log lambda_t - lambda_t)``, constants dropped."""
    x_prev, x_next = series.pairs()
    return _loglik(x_prev.astype(float), x_next.astype(float), beta, alpha)


def _loglik(xp, y, beta, alpha):
    lam = beta + alpha * xp
    pos = y > 0
    if np.any(lam[pos] <= _TINY):
        return -math.inf
    return float(np.dot(y[pos], np.log(lam[pos])) - lam.sum())


def _beta_given_alpha(xp, y, alpha, tol=1e-12, maxiter=200):
    """Maximise the concave profile in beta with safeguarded Newton steps.

    Score ``sum y/lambda - m`` is decreasing in beta; a bracket ``[lo, hi]``
    on its root is kept and Newton steps leaving it are replaced by bisection.
    """
    m = y.size
    ysum = y.sum()
    if ysum == 0:
        raise EstimationError("all responses are zero; beta_hat is on the boundary")
    pos = y > 0
    yp, xpp = y[pos], xp[pos]

    def score(b):
        lam = b + alpha * xpp
        return np.sum(yp / lam) - m, -np.sum(yp / lam**2)

    # score(b) > 0 for b small; the root is below ysum / m (score there <= 0)
    lo, hi = 0.0, ysum / m
    b = 0.5 * hi
    for _ in range(maxiter):
        s, ds = score(b)
        if s > 0:
            lo = b
        else:
            hi = b
        step = b - s / ds
        b_new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(b_new - b) <= tol * max(1.0, b):
            return float(b_new)
        b = b_new
    raise ConvergenceError(f"beta search did not converge (last bracket [{lo}, {hi}])")


def cml_fit(series: CountSeries, mode: str = "joint", alpha: float | None = None) -> CmlFit:
    """Conditional maximum likelihood for the Poisson INARCH(1) model.

    Parameters
    ----------
    series : CountSeries
    mode : {"joint", "beta_only"}
        ``joint`` maximises over ``beta > 0`` and ``alpha in [0, 1]``;
        ``beta_only`` maximises over ``beta`` at the given ``alpha``.
    alpha : float, optional
        Fixed coefficient for ``beta_only`` mode.
    """
    x_prev, x_next = series.pairs()
    if x_next.size < 2:
        raise EstimationError("need at least three time points for CML")
    xp, y = x_prev.astype(float), x_next.astype(float)
    if mode in ("beta_only", "beta_only_given_alpha"):
        if alpha is None:
            raise ValueError("beta_only mode needs a fixed alpha")
        b = _beta_given_alpha(xp, y, float(alpha))
        return CmlFit(b, float(alpha), _loglik(xp, y, b, alpha), "beta_only")
    if mode != "joint":
        raise ValueError(f"unknown mode {mode!r}")

    def neg_profile(a):
        return -_loglik(xp, y, _beta_given_alpha(xp, y, a), a)

    res = minimize_scalar(neg_profile, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-10, "maxiter": 500})
    if not res.success:
        raise ConvergenceError(f"alpha search failed: {res.message}")
    a_hat = float(res.x)
    # the bounded search never lands exactly on an endpoint
    for edge in (0.0, 1.0):
        if neg_profile(edge) < res.fun:
            a_hat = edge
    b_hat = _beta_given_alpha(xp, y, a_hat)
    return CmlFit(b_hat, a_hat, _loglik(xp, y, b_hat, a_hat), "joint")


def predicted_means(series: CountSeries, beta: float, alpha: float) -> np.ndarray:
    """One-step predictions ``beta + alpha X_{t-1}``; ``out[i]`` predicts ``values[i+1]``."""
    if len(series) < 2:
        raise ValueError("need at least two values")
    return beta + alpha * series.values[:-1].astype(float)
