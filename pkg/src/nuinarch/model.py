"""
Closed-form moments and limiting variances of the Poisson INARCH(1) model.

The conditional mean is ``lambda_t = beta + alpha * X_{t-1}`` with a
deterministic start ``X_0 = kappa``.  All formulas are written in a form
that avoids catastrophic cancellation when ``alpha`` is close to one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "InarchParams",
    "NearlyUnstableSpec",
    "marginal_mean",
    "marginal_var",
    "autocov",
    "w_cov_limit",
    "stationary_cls_avar",
    "cls_avar_from_moments",
    "stationary_moments",
    "limiting_mean_scale",
]


@dataclass(frozen=True)
class InarchParams:
    """Parameters of a Poisson INARCH(1) recursion.

    Parameters
    ----------
    beta : float
        Intercept of the conditional mean, strictly positive.
    alpha : float
        Coefficient on the lagged count, non-negative.
    kappa : int
        Deterministic starting value ``X_0``.
    """

    beta: float
    alpha: float
    kappa: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be non-negative and finite, got {self.alpha}")
        if int(self.kappa) != self.kappa or self.kappa < 0:
            raise ValueError(f"kappa must be a non-negative integer, got {self.kappa}")
        object.__setattr__(self, "kappa", int(self.kappa))

    @property
    def stationary(self) -> bool:
        return self.alpha < 1


@dataclass(frozen=True)
class NearlyUnstableSpec:
    """A nearly unstable parameterisation ``alpha_n = 1 - gamma / n``."""

    beta: float
    gamma: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not (self.gamma >= 0):
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.gamma > self.n:
            raise ValueError(f"gamma={self.gamma} exceeds n={self.n}; alpha_n would be negative")

    @property
    def alpha(self) -> float:
        return 1.0 - self.gamma / self.n

    def params(self, kappa: int = 0) -> InarchParams:
        return InarchParams(self.beta, self.alpha, kappa)


def _one_minus_pow(alpha: float, t: float) -> float:
    # 1 - alpha**t without cancellation for alpha near 1
    if alpha == 0:
        return 0.0 if t == 0 else 1.0
    return -math.expm1(t * math.log(alpha))


def marginal_mean(params: InarchParams, t: int) -> float:
    """Mean of ``X_t`` started from ``X_0 = kappa``.

    ``beta (1 - alpha^t) / (1 - alpha) + alpha^t kappa``; for ``alpha == 1``
    the limit ``beta t + kappa`` is returned.  With ``kappa = 0`` this is the
    familiar geometric-sum formula.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    b, a, k = params.beta, params.alpha, params.kappa
    if t == 0:
        return float(k)
    if a == 1:
        return b * t + k
    return b * _one_minus_pow(a, t) / (1 - a) + a**t * k


def marginal_var(params: InarchParams, t: int) -> float:
    """Variance of ``X_t`` started from ``X_0 = kappa``.

    Uses the factorised form

    ``beta (1-a^t)(1-a^{t+1}) / ((1-a)^2 (1+a)) + kappa a^t (1-a^t)/(1-a)``

    which equals the textbook expression
    ``beta/(1-a) * {(1-a^{2t})/(1-a^2) - a^t (1-a^t)/(1-a)}`` when
    ``kappa = 0``, and satisfies ``V_t = beta + a E_{t-1} + a^2 V_{t-1}``
    for any ``kappa``.  At ``a == 1`` it reduces to
    ``t (beta + kappa) + beta t (t - 1) / 2``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    b, a, k = params.beta, params.alpha, params.kappa
    if t == 0:
        return 0.0
    if a == 1:
        return t * (b + k) + b * t * (t - 1) / 2
    if a > 1:
        # same algebra, no cancellation concerns beyond the sign flips
        g_t = (a**t - 1) / (a - 1)
        return b * g_t * (a ** (t + 1) - 1) / ((a - 1) * (1 + a)) + k * a**t * g_t
    g_t = _one_minus_pow(a, t) / (1 - a)
    g_t1 = _one_minus_pow(a, t + 1) / (1 - a)
    return b * g_t * g_t1 / (1 + a) + k * a**t * g_t


def autocov(params: InarchParams, t: int, k: int) -> float:
    """``cov(X_{t+k}, X_t) = alpha^k Var(X_t)``."""
    if k < 0:
        raise ValueError("lag k must be non-negative")
    return params.alpha**k * marginal_var(params, t)


def _linear_plus_expm1(x: float) -> float:
    # x + exp(-x) - 1, accurate for small x
    if x < 1e-2:
        return x * x * (1 / 2 - x * (1 / 6 - x * (1 / 24 - x * (1 / 120 - x / 720))))
    return x + math.expm1(-x)


def w_cov_limit(beta: float, gamma: float, s: float, v: float) -> float:
    """Limiting covariance ``C_W(min(s, v))`` of the rescaled martingale.

    ``C_W(u) = beta / gamma**2 * (gamma u + exp(-gamma u) - 1)``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    u = min(s, v)
    if u < 0:
        raise ValueError("s and v must be non-negative")
    return beta / gamma**2 * _linear_plus_expm1(gamma * u)


def _check_stationary(beta, alpha):
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not (0 <= alpha < 1):
        raise ValueError(f"stationary variance needs 0 <= alpha < 1, got {alpha}")


def stationary_cls_avar(beta: float, alpha: float) -> float:
    """Asymptotic variance of ``sqrt(n)(alpha_hat - alpha)`` in closed form.

    Evaluated term by term as::

        (1-a)(1-a^2) / (1 + b(1+a))^2 * {  1 + b(1-a)
                                         + a(2 + 1/b)/(1-a)
                                         - a^2 (1-a) / (b (1-a^3))
                                         + (1 + b(1+a))/(1-a) }

    Notes
    -----
    The leading ``1 + b(1-a)`` inside the braces does not follow from the
    ``R / U^2`` sandwich it is derived from; see
    :func:`cls_avar_from_moments`.  At ``alpha = 0`` this form gives
    ``2 / (1 + beta)`` where the sandwich gives ``1 / (1 + beta)``.
    """
    _check_stationary(beta, alpha)
    a, b = alpha, beta
    prefactor = (1 - a) * (1 - a**2) / (1 + b * (1 + a)) ** 2
    braces = (
        1
        + b * (1 - a)
        + a * (2 + 1 / b) / (1 - a)
        - a**2 * (1 - a) / b / (1 - a**3)
        + (1 + b * (1 + a)) / (1 - a)
    )
    return prefactor * braces


def stationary_moments(beta: float, alpha: float) -> tuple[float, float, float]:
    """Raw stationary moments ``E X, E X^2, E X^3`` of Poisson INARCH(1).

    Obtained from the fixed points of ``E X^j = E[m_j(lambda)]`` where
    ``m_j`` are the Poisson raw moments and ``lambda = beta + alpha X``.
    """
    _check_stationary(beta, alpha)
    b, a = beta, alpha
    m1 = b / (1 - a)
    m2 = (b * b + 2 * a * b * m1 + b + a * m1) / (1 - a * a)
    lam2 = b * b + 2 * a * b * m1 + a * a * m2
    lam3_wo_m3 = b**3 + 3 * b * b * a * m1 + 3 * b * a * a * m2
    m3 = (lam3_wo_m3 + 3 * lam2 + b + a * m1) / (1 - a**3)
    return m1, m2, m3


def cls_avar_from_moments(beta: float, alpha: float) -> float:
    """Asymptotic variance of ``sqrt(n)(alpha_hat - alpha)`` as ``R / U^2``.

    ``U = E X^2`` and ``R = beta E X^2 + alpha E X^3`` with stationary
    moments; this is the sandwich form of the conditional least squares
    variance and matches Monte Carlo (at ``alpha = 0`` it is ``1/(1+beta)``).
    """
    _, m2, m3 = stationary_moments(beta, alpha)
    return (beta * m2 + alpha * m3) / m2**2


def limiting_mean_scale(spec: NearlyUnstableSpec, t: float) -> float:
    """O(n) coefficient of ``E X_{floor(nt)}``: ``beta/gamma (1 - exp(-gamma t))``.

    ``gamma == 0`` gives the unit-root ramp ``beta t``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    x = spec.gamma * t
    if x == 0:
        return spec.beta * t
    return spec.beta * -math.expm1(-x) / spec.gamma
