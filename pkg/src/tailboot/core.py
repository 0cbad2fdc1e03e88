"""Order statistics and the moment estimators of the tail index, scale and location.

All estimators use the ``k + 1`` largest order statistics
``X[n-k] <= ... <= X[n]`` of the sample through the log-spacings
``log X[n-i] - log X[n-k]`` for ``i = 0..k-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import BadK, DegenerateTail, InputError, NonPositiveTail

MIN_SAMPLE_SIZE = 3


@dataclass(frozen=True, eq=False)
class Sample:
    """An i.i.d. sample, sorted once on construction.

    ``values`` keeps the input order; ``sorted_values`` is the ascending
    (stable) sort used for order statistics.
    """

    values: np.ndarray
    sorted_values: np.ndarray = field(repr=False)

    def __init__(self, values: Iterable[float], *, min_size: int = MIN_SAMPLE_SIZE):
        arr = np.array(values, dtype=float).ravel()
        if arr.size < min_size:
            raise InputError(f"sample needs at least {min_size} observations, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise InputError("sample contains NaN or infinite values")
        arr.setflags(write=False)
        srt = np.sort(arr, kind="stable")
        srt.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "sorted_values", srt)

    @classmethod
    def from_sorted(cls, sorted_values: np.ndarray) -> "Sample":
        # Bootstrap hot path: the caller guarantees finiteness and ascending order.
        obj = object.__new__(cls)
        sorted_values.setflags(write=False)
        object.__setattr__(obj, "values", sorted_values)
        object.__setattr__(obj, "sorted_values", sorted_values)
        return obj

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def order_stat(self, i: int) -> float:
        """``X[i, n]``, 1-based: ``order_stat(1)`` is the minimum, ``order_stat(n)`` the maximum."""
        if not 1 <= i <= self.n:
            raise IndexError(f"order statistic index {i} outside 1..{self.n}")
        return float(self.sorted_values[i - 1])


@dataclass(frozen=True)
class TailFit:
    """Moment-estimator bundle for one ``(n, k)``.

    ``gamma_plus`` is the Hill statistic ``h_n``; ``gamma_minus`` is left
    unclamped (it may be slightly positive in finite samples).
    """

    n: int
    k: int
    h_n: float
    m_n: float
    gamma_plus: float
    gamma_minus: float
    gamma: float
    scale_a: float
    loc_b: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "h_n": self.h_n,
            "m_n": self.m_n,
            "gamma_plus": self.gamma_plus,
            "gamma_minus": self.gamma_minus,
            "gamma": self.gamma,
            "scale_a": self.scale_a,
            "loc_b": self.loc_b,
        }


def check_k(k: int, n: int) -> int:
    if isinstance(k, bool) or int(k) != k:
        raise BadK(f"k must be an integer, got {k!r}")
    k = int(k)
    if not 1 <= k <= n - 1:
        raise BadK(f"k={k} outside 1..{n - 1} for n={n}")
    return k


def fit_sorted(xs: np.ndarray, k: int) -> TailFit:
    """:func:`fit_tail` on an ascending array, without re-validating the sample."""
    n = xs.size
    k = check_k(k, n)
    top = xs[n - k - 1:]
    threshold = float(top[0])
    if threshold <= 0.0:
        raise NonPositiveTail(f"X[n-k] = {threshold!r} <= 0 (k={k}); logs undefined")
    logs = np.log(top)
    spacings = logs[1:] - logs[0]
    h = math.fsum(spacings) / k
    m = math.fsum(spacings * spacings) / k
    if m == 0.0:
        raise DegenerateTail(f"top {k + 1} order statistics are all equal")
    one_minus_ratio = 1.0 - h * h / m
    if one_minus_ratio <= 0.0:
        # all k spacings equal (always the case for k=1): gamma_minus = -inf
        raise DegenerateTail(f"H^2 == M for k={k}; gamma_minus is unbounded")
    gamma_minus = 1.0 - 0.5 / one_minus_ratio
    return TailFit(
        n=n,
        k=k,
        h_n=h,
        m_n=m,
        gamma_plus=h,
        gamma_minus=gamma_minus,
        gamma=h + gamma_minus,
        scale_a=threshold * h * (1.0 - gamma_minus),
        loc_b=threshold,
    )


def fit_tail(sample: Sample | Iterable[float], k: int) -> TailFit:
    """Moment (Dekkers-Einmahl-de Haan) estimates from the top ``k + 1`` order statistics.

    Raises :class:`BadK` unless ``1 <= k <= n - 1``, :class:`NonPositiveTail`
    when ``X[n-k] <= 0`` and :class:`DegenerateTail` when the log-spacings do
    not determine ``gamma_minus`` (all zero, or all equal).
    """
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    return fit_sorted(sample.sorted_values, k)


def population_moments(gamma_minus: float) -> tuple[float, float]:
    """Limits ``(lambda_1, lambda_2)`` of ``H_n / q`` and ``M_n / q**2`` for a given ``gamma_minus <= 0``."""
    lam1 = 1.0 / (1.0 - gamma_minus)
    lam2 = 2.0 / ((1.0 - gamma_minus) * (1.0 - 2.0 * gamma_minus))
    return lam1, lam2


def gamma_minus_from_moments(h: float, m: float) -> float:
    """The ``gamma_minus`` map ``1 - 1/2 (1 - h^2/m)^-1`` on its own."""
    return 1.0 - 0.5 / (1.0 - h * h / m)
