"""Full-sample (n-out-of-n) bootstrap of the tail estimators and the confidence intervals built on it.

Replicate ``r`` of a run keyed by ``seed`` resamples with the stream
``substream(seed, r)``; every replicate refits the same ``k``. Replicates on
which the fit breaks down (:class:`DegenerateTail`, :class:`NonPositiveTail`)
are counted as failures and dropped.

Empirical quantiles of replicate values use the order-statistic rule
``z[ceil(alpha * B)]`` (clamped to ``1..B``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .core import Sample, TailFit, fit_sorted
from .errors import (
    AllReplicatesFailed,
    EmptyBootstrap,
    EstimationError,
    ZeroBaseEstimate,
)
from .rng import chunked, parallel_map, substream
from .tailfuncs import (
    ProbabilityEstimate,
    _q,
    _w,
    box_cox,
    estimate_tail_probability,
    sigma_sq,
    tail_probability,
)

MIN_SUCCESS_FRACTION = 0.5
_CHUNK = 64


class Target(str, Enum):
    TAIL_PROB = "tail_prob"
    HIGH_QUANTILE = "quantile"
    GAMMA = "gamma"
    SCALE = "scale"
    LOC = "loc"


class Method(str, Enum):
    EFRON = "efron"
    PERCENTILE = "percentile"
    STUDENT_T = "t"
    ASYMPTOTIC = "asymptotic"


_METHOD_ALIASES = {
    "efron": Method.EFRON,
    "efron_percentile": Method.EFRON,
    "percentile": Method.PERCENTILE,
    # reflection of Efron's interval on the log scale: same construction
    "basic": Method.PERCENTILE,
    "t": Method.STUDENT_T,
    "student_t": Method.STUDENT_T,
    "asymptotic": Method.ASYMPTOTIC,
    "normal": Method.ASYMPTOTIC,
}


def parse_method(name: str | Method) -> Method:
    if isinstance(name, Method):
        return name
    try:
        return _METHOD_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown CI method {name!r}; choose from {sorted(_METHOD_ALIASES)}") from None


@dataclass(frozen=True)
class Statistic:
    """Which tail statistic a bootstrap run records; ``argument`` is ``x_n`` or ``p_n`` when needed."""

    target: Target
    argument: float | None = None

    @classmethod
    def tail_prob(cls, x_target: float) -> "Statistic":
        return cls(Target.TAIL_PROB, float(x_target))

    @classmethod
    def high_quantile(cls, p_target: float) -> "Statistic":
        if not 0.0 < p_target < 1.0:
            raise ValueError(f"p_target must lie in (0, 1), got {p_target!r}")
        return cls(Target.HIGH_QUANTILE, float(p_target))

    @classmethod
    def gamma_hat(cls) -> "Statistic":
        return cls(Target.GAMMA)

    @classmethod
    def scale(cls) -> "Statistic":
        return cls(Target.SCALE)

    @classmethod
    def loc(cls) -> "Statistic":
        return cls(Target.LOC)

    def evaluate(self, fit: TailFit) -> float:
        t = self.target
        if t is Target.TAIL_PROB:
            return tail_probability(fit, self.argument)[0]
        if t is Target.HIGH_QUANTILE:
            d = fit.k / (fit.n * self.argument)
            return fit.loc_b + fit.scale_a * box_cox(d, fit.gamma)
        if t is Target.GAMMA:
            return fit.gamma
        if t is Target.SCALE:
            return fit.scale_a
        return fit.loc_b

    def describe(self) -> dict:
        return {"target": self.target.value, "argument": self.argument}


@dataclass(frozen=True)
class ResamplePlan:
    master_seed: int | tuple
    replicates: int
    statistic: Statistic

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")


@dataclass(frozen=True, eq=False)
class BootstrapDistribution:
    """Replicate values of one statistic.

    ``replicate_values`` is sorted ascending. ``fits`` and ``raw_values`` keep
    the successful replicates in replicate order (paired), which the
    studentized interval needs.
    """

    replicate_values: np.ndarray
    failures: int
    base_fit: TailFit
    plan: ResamplePlan
    fits: tuple = field(default=(), repr=False)
    raw_values: np.ndarray = field(default=None, repr=False)

    @property
    def B(self) -> int:
        return self.plan.replicates

    @property
    def base_value(self) -> float:
        return self.plan.statistic.evaluate(self.base_fit)

    def quantile(self, alpha: float) -> float:
        return empirical_quantile(self.replicate_values, alpha)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: Method
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower!r} > upper {self.upper!r}")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def log_length(self) -> float:
        """``log(upper / lower)``; ``inf`` when ``lower == 0``."""
        if self.lower <= 0.0:
            return math.inf
        return math.log(self.upper / self.lower)

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "method": self.method.value,
            **self.diagnostics,
        }


def empirical_quantile(sorted_values: np.ndarray | Sequence[float], alpha: float) -> float:
    """``z[ceil(alpha * B)]`` on ascending ``sorted_values``, index clamped into ``1..B``."""
    b = len(sorted_values)
    if b == 0:
        raise EmptyBootstrap("no replicate values")
    # round first: 0.025 * 1000 evaluates to 25.000000000000004
    j = math.ceil(round(alpha * b, 9))
    j = min(max(j, 1), b)
    return float(sorted_values[j - 1])


def _tail_alphas(level: float) -> tuple[float, float]:
    if not 0.0 < level <= 1.0:
        raise ValueError(f"level must lie in (0, 1], got {level!r}")
    alpha = 1.0 - level
    return alpha / 2.0, 1.0 - alpha / 2.0


# -- resampling --------------------------------------------------------------


def _resample_values(values: np.ndarray, seed) -> np.ndarray:
    rng = substream(seed)
    return values[rng.integers(0, values.size, values.size)]


def resample(sample: Sample | Sequence[float], seed) -> Sample | np.ndarray:
    """``n`` draws with replacement from ``sample``; deterministic in ``seed``.

    ``seed`` is an int or a key tuple (bootstrap replicate ``r`` of a run
    seeded ``s`` is ``resample(sample, (s, r))``). Returns a :class:`Sample`
    for a :class:`Sample` input and an array otherwise.
    """
    if isinstance(sample, Sample):
        return Sample(_resample_values(np.asarray(sample.values), seed), min_size=1)
    return _resample_values(np.asarray(sample, dtype=float).ravel(), seed)


def _key(seed, r: int) -> tuple:
    base = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    return base + (r,)


def replicate_fits(
    sample: Sample, ks: Sequence[int], seed, replicates: int, workers: int = 1
) -> list[list]:
    """Refit every ``k`` in ``ks`` on each of ``replicates`` resamples.

    Entry ``[r][j]`` is the :class:`TailFit` for replicate ``r`` and ``ks[j]``,
    or the :class:`EstimationError` instance raised by that fit.
    """
    values = np.asarray(sample.values)
    ks = list(ks)

    def run(rows: range) -> list[list]:
        out = []
        for r in rows:
            xs = np.sort(_resample_values(values, _key(seed, r)))
            row = []
            for k in ks:
                try:
                    row.append(fit_sorted(xs, k))
                except EstimationError as exc:
                    row.append(exc)
            out.append(row)
        return out

    parts = parallel_map(run, chunked(replicates, _CHUNK), workers)
    return [row for part in parts for row in part]


def distribution_from_fits(
    base_fit: TailFit | None, plan: ResamplePlan, fits: Sequence, base_error: Exception | None = None
) -> BootstrapDistribution:
    ok = [f for f in fits if isinstance(f, TailFit)]
    failures = len(fits) - len(ok)
    if len(ok) == 0 or len(ok) < MIN_SUCCESS_FRACTION * plan.replicates:
        raise AllReplicatesFailed(failures, plan.replicates)
    if base_fit is None:
        raise base_error if base_error is not None else EstimationError("base fit missing")
    raw = np.array([plan.statistic.evaluate(f) for f in ok], dtype=float)
    return BootstrapDistribution(
        replicate_values=np.sort(raw),
        failures=failures,
        base_fit=base_fit,
        plan=plan,
        fits=tuple(ok),
        raw_values=raw,
    )


def bootstrap_distribution(
    sample: Sample | Sequence[float], k: int, plan: ResamplePlan, workers: int = 1
) -> BootstrapDistribution:
    """Bootstrap law of ``plan.statistic`` at a fixed ``k``.

    Raises :class:`AllReplicatesFailed` when fewer than half of the
    replicates produce a fit.
    """
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    base_fit, base_error = None, None
    try:
        base_fit = fit_sorted(sample.sorted_values, k)
    except EstimationError as exc:
        base_error = exc
    rows = replicate_fits(sample, [k], plan.master_seed, plan.replicates, workers)
    return distribution_from_fits(base_fit, plan, [row[0] for row in rows], base_error)


# -- intervals ---------------------------------------------------------------


def _enough(successes: int, boot: BootstrapDistribution) -> None:
    if successes == 0:
        raise EmptyBootstrap("no usable replicate values")
    if successes < MIN_SUCCESS_FRACTION * boot.B:
        raise AllReplicatesFailed(boot.B - successes, boot.B)


def ci_efron_percentile(boot: BootstrapDistribution, level: float) -> ConfidenceInterval:
    """Quantiles ``alpha/2`` and ``1 - alpha/2`` of the replicate values."""
    lo_a, hi_a = _tail_alphas(level)
    vals = boot.replicate_values
    if vals.size == 0:
        raise EmptyBootstrap("no replicate values")
    return ConfidenceInterval(
        lower=empirical_quantile(vals, lo_a),
        upper=empirical_quantile(vals, hi_a),
        level=level,
        method=Method.EFRON,
        diagnostics={"failures": boot.failures, "replicates": boot.B},
    )


def _pivot_scale(base: ProbabilityEstimate, scaling: str, p_true: float | None) -> float:
    fit = base.fit
    if scaling == "hat":
        d = base.d_hat
    elif scaling == "true":
        if p_true is None or not p_true > 0.0:
            raise ValueError("scaling='true' needs the true tail probability p_true > 0")
        d = fit.k / (fit.n * p_true)
    else:
        raise ValueError(f"scaling must be 'hat' or 'true', got {scaling!r}")
    return _w(fit.gamma, d)


def _prob_pivots(boot, base, w, replicate_scaling, studentize):
    """Pivots ``sqrt(k) log(p*/p) / (w_r * s_r)`` and the number of replicates dropped."""
    p_hat = base.p_hat
    sk = math.sqrt(base.fit.k)
    n = base.fit.n
    piv = []
    dropped = 0
    for fit, p_star in zip(boot.fits, boot.raw_values):
        if p_star <= 0.0:
            dropped += 1
            continue
        w_r = _w(fit.gamma, fit.k / (n * p_star)) if replicate_scaling else w
        if studentize:
            if not fit.gamma > -0.5:
                dropped += 1
                continue
            w_r = w_r * math.sqrt(sigma_sq(fit.gamma))
        if not w_r > 0.0:
            dropped += 1
            continue
        piv.append(sk * math.log(p_star / p_hat) / w_r)
    return np.sort(np.array(piv, dtype=float)), dropped


def _check_base(base: ProbabilityEstimate) -> None:
    if not base.p_hat > 0.0:
        raise ZeroBaseEstimate(f"p_hat = {base.p_hat!r}; log-scale interval undefined")


def _log_interval(base, pivots, level, scale):
    lo_a, hi_a = _tail_alphas(level)
    sk = math.sqrt(base.fit.k)
    z_lo = empirical_quantile(pivots, lo_a)
    z_hi = empirical_quantile(pivots, hi_a)
    lower = base.p_hat * math.exp(-z_hi * scale / sk)
    upper = base.p_hat * math.exp(-z_lo * scale / sk)
    return min(lower, 1.0), min(upper, 1.0), (z_lo, z_hi)


def ci_percentile(
    boot: BootstrapDistribution,
    base: ProbabilityEstimate,
    level: float,
    *,
    scaling: str = "hat",
    p_true: float | None = None,
    replicate_scaling: bool = False,
) -> ConfidenceInterval:
    """Percentile interval for a tail probability from log-ratio pivots.

    With the default fixed scale ``w = w_gamma(d_hat)`` the bounds reduce to
    ``p_hat**2 / p*_{1-alpha/2}`` and ``p_hat**2 / p*_{alpha/2}``.
    ``replicate_scaling`` divides each pivot by its own
    ``w_{gamma*}(d_hat*)`` instead. Zero-valued replicates are dropped.
    """
    _check_base(base)
    w = _pivot_scale(base, scaling, p_true)
    pivots, dropped = _prob_pivots(boot, base, w, replicate_scaling, studentize=False)
    _enough(pivots.size, boot)
    lower, upper, (z_lo, z_hi) = _log_interval(base, pivots, level, w)
    return ConfidenceInterval(
        lower=lower,
        upper=upper,
        level=level,
        method=Method.PERCENTILE,
        diagnostics={
            "failures": boot.failures + dropped,
            "replicates": boot.B,
            "zero_replicates": dropped,
            "pivot_quantiles": [z_lo, z_hi],
        },
    )


def ci_t(
    boot: BootstrapDistribution,
    base: ProbabilityEstimate,
    level: float,
    studentized: bool = True,
    *,
    scaling: str = "hat",
    p_true: float | None = None,
    replicate_scaling: bool = False,
) -> ConfidenceInterval:
    """t-interval for a tail probability.

    ``studentized=False`` uses the constant ``sigma(gamma_hat)`` in both the
    pivot and the bounds, where it cancels: the result equals
    :func:`ci_percentile`. ``studentized=True`` divides replicate ``r``'s
    pivot by ``sigma(gamma*_r)``; replicates with ``gamma*_r <= -1/2`` are
    dropped.
    """
    _check_base(base)
    sigma_hat = math.sqrt(sigma_sq(base.fit.gamma))
    if not studentized:
        ci = ci_percentile(
            boot, base, level, scaling=scaling, p_true=p_true, replicate_scaling=replicate_scaling
        )
        diag = dict(ci.diagnostics, studentized=False, sigma_hat=sigma_hat)
        return ConfidenceInterval(ci.lower, ci.upper, level, Method.STUDENT_T, diag)
    w = _pivot_scale(base, scaling, p_true)
    pivots, dropped = _prob_pivots(boot, base, w, replicate_scaling, studentize=True)
    _enough(pivots.size, boot)
    lower, upper, (z_lo, z_hi) = _log_interval(base, pivots, level, w * sigma_hat)
    return ConfidenceInterval(
        lower=lower,
        upper=upper,
        level=level,
        method=Method.STUDENT_T,
        diagnostics={
            "failures": boot.failures + dropped,
            "replicates": boot.B,
            "dropped_replicates": dropped,
            "studentized": True,
            "sigma_hat": sigma_hat,
            "pivot_quantiles": [z_lo, z_hi],
        },
    )


def normal_quantile(level: float) -> float:
    lo_a, hi_a = _tail_alphas(level)
    if hi_a >= 1.0:
        return math.inf
    return NormalDist().inv_cdf(hi_a)


def ci_asymptotic(base: ProbabilityEstimate, level: float) -> ConfidenceInterval:
    """Normal-approximation interval ``(p/(1 + z s), p/(1 - z s))``, ``s = sigma(g) w_g(d_hat) / sqrt(k)``."""
    _check_base(base)
    fit = base.fit
    s = math.sqrt(sigma_sq(fit.gamma)) * _w(fit.gamma, base.d_hat) / math.sqrt(fit.k)
    z = normal_quantile(level)
    zs = 0.0 if z == 0.0 or s == 0.0 else z * s
    lower = base.p_hat / (1.0 + zs)
    capped = 1.0 - zs <= 0.0
    upper = 1.0 if capped else min(base.p_hat / (1.0 - zs), 1.0)
    return ConfidenceInterval(
        lower=min(max(lower, 0.0), 1.0),
        upper=upper,
        level=level,
        method=Method.ASYMPTOTIC,
        diagnostics={"z": z, "s": s, "upper_capped": capped},
    )


# -- pivots for the other targets ---------------------------------------------


def _pivot_interval(boot: BootstrapDistribution, level: float, normalizer: str) -> ConfidenceInterval:
    """Basic/percentile-pivot interval for gamma, a(n/k), b(n/k) and x(p_n)."""
    fit = boot.base_fit
    stat = boot.plan.statistic
    sk = math.sqrt(fit.k)
    theta = stat.evaluate(fit)
    t = stat.target
    if t is Target.GAMMA:
        piv = sk * (boot.raw_values - theta)
    elif t is Target.SCALE:
        piv = sk * (boot.raw_values / theta - 1.0)
    elif t is Target.LOC:
        piv = sk * (boot.raw_values - theta) / fit.scale_a
    elif t is Target.HIGH_QUANTILE:
        d = fit.k / (fit.n * stat.argument)
        if normalizer == "replicate":
            norms = np.array([f.scale_a * _q(f.gamma, d) for f in boot.fits])
        elif normalizer == "base":
            norms = fit.scale_a * _q(fit.gamma, d)
        else:
            raise ValueError(f"normalizer must be 'replicate' or 'base', got {normalizer!r}")
        piv = sk * (boot.raw_values - theta) / norms
    else:
        raise ValueError("use ci_percentile for tail probabilities")
    piv = np.sort(piv[np.isfinite(piv)])
    _enough(piv.size, boot)
    lo_a, hi_a = _tail_alphas(level)
    z_lo, z_hi = empirical_quantile(piv, lo_a), empirical_quantile(piv, hi_a)
    if t is Target.SCALE:
        lower = theta / (1.0 + z_hi / sk) if 1.0 + z_hi / sk > 0.0 else math.inf
        upper = theta / (1.0 + z_lo / sk) if 1.0 + z_lo / sk > 0.0 else math.inf
    else:
        unit = {
            Target.GAMMA: 1.0,
            Target.LOC: fit.scale_a,
        }.get(t)
        if unit is None:
            unit = fit.scale_a * _q(fit.gamma, fit.k / (fit.n * stat.argument))
        lower = theta - z_hi * unit / sk
        upper = theta - z_lo * unit / sk
    return ConfidenceInterval(
        lower=lower,
        upper=upper,
        level=level,
        method=Method.PERCENTILE,
        diagnostics={
            "failures": boot.failures + (boot.raw_values.size - piv.size),
            "replicates": boot.B,
            "pivot_quantiles": [z_lo, z_hi],
        },
    )


def interval(
    boot: BootstrapDistribution,
    method: Method | str,
    level: float,
    *,
    studentized: bool = True,
    scaling: str = "hat",
    p_true: float | None = None,
    replicate_scaling: bool = False,
    normalizer: str = "replicate",
) -> ConfidenceInterval:
    """Dispatch to the interval constructor for ``boot``'s statistic and ``method``."""
    method = parse_method(method)
    stat = boot.plan.statistic
    if method is Method.EFRON:
        return ci_efron_percentile(boot, level)
    if stat.target is Target.TAIL_PROB:
        base = estimate_tail_probability(boot.base_fit, stat.argument)
        opts = dict(scaling=scaling, p_true=p_true, replicate_scaling=replicate_scaling)
        if method is Method.PERCENTILE:
            return ci_percentile(boot, base, level, **opts)
        if method is Method.STUDENT_T:
            return ci_t(boot, base, level, studentized, **opts)
        return ci_asymptotic(base, level)
    if method is Method.PERCENTILE:
        return _pivot_interval(boot, level, normalizer)
    raise ValueError(f"method {method.value!r} is only available for tail probabilities")


def bootstrap_ci_for(
    statistic: Statistic,
    method: Method | str,
    sample: Sample | Sequence[float],
    k: int,
    B: int = 1000,
    seed=None,
    level: float = 0.95,
    *,
    workers: int = 1,
    **options,
) -> ConfidenceInterval:
    """Fit, bootstrap and build one interval in a single call.

    The point estimate is reported in ``diagnostics['estimate']``.
    ``options`` are passed to :func:`interval`.
    """
    from .rng import default_seed

    if not isinstance(sample, Sample):
        sample = Sample(sample)
    method = parse_method(method)
    seed = default_seed() if seed is None else seed
    if method is Method.ASYMPTOTIC:
        if statistic.target is not Target.TAIL_PROB:
            raise ValueError("the asymptotic interval is implemented for tail probabilities only")
        base = estimate_tail_probability(fit_sorted(sample.sorted_values, k), statistic.argument)
        ci = ci_asymptotic(base, level)
    else:
        boot = bootstrap_distribution(sample, k, ResamplePlan(seed, B, statistic), workers)
        ci = interval(boot, method, level, **options)
        base = boot.base_fit
    fit = base.fit if isinstance(base, ProbabilityEstimate) else base
    estimate = statistic.evaluate(fit)
    return ConfidenceInterval(ci.lower, ci.upper, ci.level, ci.method, dict(ci.diagnostics, estimate=estimate))
