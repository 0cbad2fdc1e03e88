"""Scaling functions, asymptotic variance, and the high-quantile / tail-probability estimators.

Expressions of the form ``(t**g - 1) / g`` and their integrals are evaluated
through ``u = g * log(t)`` with ``expm1``/``log1p`` and short power series, so
they stay accurate as ``g -> 0`` and as ``t -> 1``. Below
:data:`GAMMA_TOL` the exact ``g = 0`` limits are used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import TailFit
from .errors import BadT, OutOfDomain

GAMMA_TOL = 1e-8
_SERIES_U = 0.5
_SERIES_TERMS = 24


def _q_series(u: float) -> float:
    # sum_{j>=2} (j-1) u^(j-2) / j!  ==  (u e^u - expm1(u)) / u^2
    total, term = 0.0, 0.5  # term = u^(j-2) / j!
    for j in range(2, 2 + _SERIES_TERMS):
        total += (j - 1) * term
        term *= u / (j + 1)
    return total


def _w_series(u: float) -> float:
    # sum_{j>=2} (-u)^(j-2) / j!  ==  (u + expm1(-u)) / u^2
    total, term = 0.0, 0.5
    for j in range(2, 2 + _SERIES_TERMS):
        total += term
        term *= -u / (j + 1)
    return total


def _q(gamma: float, t: float) -> float:
    # valid for any t > 0 (nonnegative on both sides of 1)
    lt = math.log(t)
    if abs(gamma) < GAMMA_TOL:
        return 0.5 * lt * lt
    u = gamma * lt
    if abs(u) < _SERIES_U:
        return lt * lt * _q_series(u)
    return (u * math.exp(u) - math.expm1(u)) / (gamma * gamma)


def _w(gamma: float, t: float) -> float:
    lt = math.log(t)
    if abs(gamma) < GAMMA_TOL:
        return 0.5 * lt * lt
    u = gamma * lt
    if abs(u) < _SERIES_U:
        return lt * lt * _w_series(u)
    return (u + math.expm1(-u)) / (gamma * gamma)


def _check_t(t: float) -> None:
    if not t >= 1.0:
        raise BadT(f"t must be >= 1, got {t!r}")


def q_gamma(gamma: float, t: float) -> float:
    """``int_1^t s**(gamma-1) log(s) ds`` for ``t >= 1``."""
    _check_t(t)
    return _q(gamma, t)


def w_gamma(gamma: float, t: float) -> float:
    """``t**-gamma * q_gamma(gamma, t)``, computed in fused form."""
    _check_t(t)
    return _w(gamma, t)


def sigma_sq(gamma: float) -> float:
    """Asymptotic variance of the normalized tail-probability pivot.

    ``gamma**2 + 1`` for ``gamma >= 0``; the rational branch for
    ``-1/2 < gamma < 0``. Raises :class:`OutOfDomain` for ``gamma <= -1/2``.
    """
    if not gamma > -0.5:
        raise OutOfDomain(f"sigma^2 requires gamma > -1/2, got {gamma!r}")
    if gamma >= 0.0:
        return gamma * gamma + 1.0
    g = gamma
    num = (1.0 - g) ** 2 * (1.0 - 3.0 * g + 4.0 * g * g)
    den = (1.0 - 2.0 * g) * (1.0 - 3.0 * g) * (1.0 - 4.0 * g)
    return num / den


def box_cox(d: float, gamma: float) -> float:
    """``(d**gamma - 1) / gamma``, read as ``log d`` at ``gamma = 0``."""
    ld = math.log(d)
    u = gamma * ld
    if abs(gamma) < GAMMA_TOL or u == 0.0:
        return ld
    return ld * (math.expm1(u) / u)


@dataclass(frozen=True)
class QuantileEstimate:
    p_target: float
    x_hat: float
    d_n: float
    scale_factor: float
    fit: TailFit

    @property
    def in_sample(self) -> bool:
        """True when ``p_target > k/n``, i.e. no extrapolation beyond ``X[n-k]``."""
        return self.d_n < 1.0

    def as_dict(self) -> dict:
        return {
            "p_target": self.p_target,
            "x_hat": self.x_hat,
            "d_n": self.d_n,
            "scale_factor": self.scale_factor,
            "in_sample": self.in_sample,
        }


@dataclass(frozen=True)
class ProbabilityEstimate:
    x_target: float
    p_hat: float
    d_hat: float
    clamped: bool
    fit: TailFit

    def as_dict(self) -> dict:
        return {
            "x_target": self.x_target,
            "p_hat": self.p_hat,
            "d_hat": self.d_hat,
            "clamped": self.clamped,
        }


def estimate_high_quantile(fit: TailFit, p_target: float) -> QuantileEstimate:
    """``x_hat = b + a * (d**gamma - 1)/gamma`` with ``d = k / (n p_target)``.

    ``scale_factor = a * q_gamma(gamma, d)`` is the normalizer of the
    quantile pivot. ``d < 1`` is allowed and reported via ``in_sample``.
    """
    if not 0.0 < p_target < 1.0:
        raise ValueError(f"p_target must lie in (0, 1), got {p_target!r}")
    d = fit.k / (fit.n * p_target)
    x_hat = fit.loc_b + fit.scale_a * box_cox(d, fit.gamma)
    return QuantileEstimate(
        p_target=p_target,
        x_hat=x_hat,
        d_n=d,
        scale_factor=fit.scale_a * _q(fit.gamma, d),
        fit=fit,
    )


def tail_probability(fit: TailFit, x_target: float) -> tuple[float, bool]:
    """``(p_hat, clamped)`` without building a :class:`ProbabilityEstimate`."""
    frac = fit.k / fit.n
    y = (x_target - fit.loc_b) / fit.scale_a
    g = fit.gamma
    if abs(g) < GAMMA_TOL:
        log_ratio = -y
    else:
        arg = g * y
        if arg <= -1.0:
            # max{0, .} branch: beyond the estimated endpoint (g < 0) or below
            # the estimated lower end of a heavy tail (g > 0)
            return (0.0, True) if g < 0.0 else (1.0, True)
        log_ratio = -math.log1p(arg) / g
    p = frac * math.exp(log_ratio) if log_ratio < 700.0 else math.inf
    if p > 1.0:
        return 1.0, True
    return p, False


def estimate_tail_probability(fit: TailFit, x_target: float) -> ProbabilityEstimate:
    """``p_hat = (k/n) * max{0, 1 + gamma (x - b)/a} ** (-1/gamma)``, capped into ``[0, 1]``."""
    p, clamped = tail_probability(fit, x_target)
    d_hat = fit.k / (fit.n * p) if p > 0.0 else math.inf
    return ProbabilityEstimate(x_target=x_target, p_hat=p, d_hat=d_hat, clamped=clamped, fit=fit)
