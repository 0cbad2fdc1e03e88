"""Coverage studies and k-sweeps for tail-probability confidence intervals.

A coverage study repeats, for ``mc_reps`` independent trials: draw a sample
from a known model, bootstrap it once, and for each ``k`` and each method
build an interval for the true ``p_n`` and record whether it covers.

Trial ``t`` draws its sample from ``substream(seed, t, 0)`` and its
bootstrap replicates from ``substream(seed, t, 1, r)``; the same resamples
serve every ``k``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .bootstrap import (
    Method,
    ResamplePlan,
    Statistic,
    ci_asymptotic,
    distribution_from_fits,
    interval,
    parse_method,
    replicate_fits,
)
from .core import Sample, check_k, fit_sorted
from .errors import EstimationError
from .models import ModelSpec, draw, true_tail_quantile
from .rng import parallel_map
from .tailfuncs import estimate_tail_probability


@dataclass(frozen=True)
class StudyConfig:
    model: ModelSpec
    n: int
    np_n: float
    k_grid: tuple
    B: int = 1000
    mc_reps: int = 1000
    level: float = 0.95
    methods: tuple = ("efron", "asymptotic")
    master_seed: int = 0
    scaling: str = "hat"
    replicate_scaling: bool = False
    studentized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        object.__setattr__(self, "methods", tuple(parse_method(m).value for m in self.methods))
        for k in self.k_grid:
            check_k(k, self.n)
        if not 0.0 < self.p_n < 1.0:
            raise ValueError(f"p_n = np_n / n = {self.p_n!r} must lie in (0, 1)")
        if self.mc_reps < 0 or self.B < 1:
            raise ValueError("mc_reps must be >= 0 and B >= 1")

    @property
    def p_n(self) -> float:
        return self.np_n / self.n

    def echo(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.label
        d["k_grid"] = list(self.k_grid)
        d["methods"] = list(self.methods)
        d["p_n"] = self.p_n
        return d


@dataclass
class CoverageCell:
    k: int
    method: str
    contained: int = 0
    missed: int = 0
    failures: int = 0
    log_lengths: list = field(default_factory=list, repr=False)
    lengths: list = field(default_factory=list, repr=False)

    @property
    def trials(self) -> int:
        return self.contained + self.missed + self.failures

    @property
    def coverage(self) -> float:
        """Fraction of non-failed trials whose interval covers ``p_n``."""
        m = self.contained + self.missed
        return self.contained / m if m else math.nan

    @property
    def coverage_se(self) -> float:
        m = self.contained + self.missed
        c = self.coverage
        return math.sqrt(c * (1.0 - c) / m) if m else math.nan

    def as_dict(self) -> dict:
        finite = [x for x in self.log_lengths if math.isfinite(x)]
        return {
            "k": self.k,
            "method": self.method,
            "trials": self.trials,
            "contained": self.contained,
            "missed": self.missed,
            "failures": self.failures,
            "coverage": self.coverage,
            "coverage_se": self.coverage_se,
            "mean_log_length": float(np.mean(finite)) if finite else math.nan,
            "infinite_log_lengths": len(self.log_lengths) - len(finite),
            "mean_length": float(np.mean(self.lengths)) if self.lengths else math.nan,
        }


@dataclass
class CoverageReport:
    config: StudyConfig
    x_n: float
    cells: list

    def cell(self, k: int, method: str) -> CoverageCell:
        method = parse_method(method).value
        for c in self.cells:
            if c.k == k and c.method == method:
                return c
        raise KeyError((k, method))

    def rows(self) -> list[dict]:
        return [c.as_dict() for c in self.cells]


def _trial_outcomes(config: StudyConfig, x_n: float, t: int) -> list[tuple]:
    """``(k, method, outcome, lower, upper)`` per cell for trial ``t``; outcome is 'in', 'out' or 'fail'."""
    sample = draw(config.model, config.n, (config.master_seed, t, 0))
    p_n = config.p_n
    methods = [Method(m) for m in config.methods]
    need_boot = any(m is not Method.ASYMPTOTIC for m in methods)
    rows = None
    if need_boot:
        rows = replicate_fits(sample, config.k_grid, (config.master_seed, t, 1), config.B)
    stat = Statistic.tail_prob(x_n)
    plan = ResamplePlan((config.master_seed, t, 1), config.B, stat)
    out = []
    for j, k in enumerate(config.k_grid):
        try:
            base_fit = fit_sorted(sample.sorted_values, k)
        except EstimationError:
            base_fit = None
        boot = None
        if need_boot and base_fit is not None:
            try:
                boot = distribution_from_fits(base_fit, plan, [row[j] for row in rows])
            except EstimationError:
                boot = None
        for m in methods:
            if base_fit is None or (m is not Method.ASYMPTOTIC and boot is None):
                out.append((k, m.value, "fail", math.nan, math.nan))
                continue
            try:
                if m is Method.ASYMPTOTIC:
                    ci = ci_asymptotic(estimate_tail_probability(base_fit, x_n), config.level)
                else:
                    ci = interval(
                        boot,
                        m,
                        config.level,
                        studentized=config.studentized,
                        scaling=config.scaling,
                        p_true=p_n,
                        replicate_scaling=config.replicate_scaling,
                    )
            except EstimationError:
                out.append((k, m.value, "fail", math.nan, math.nan))
                continue
            out.append((k, m.value, "in" if ci.contains(p_n) else "out", ci.lower, ci.upper))
    return out


def coverage_study(config: StudyConfig, workers: int = 1) -> CoverageReport:
    """Empirical coverage and interval length per ``(k, method)``.

    Trials whose estimator or interval fails are counted under ``failures``
    and never abort the study.
    """
    x_n = true_tail_quantile(config.model, config.p_n)
    if config.mc_reps == 0:
        return CoverageReport(config, x_n, [])
    cells = {(k, m): CoverageCell(k, m) for k in config.k_grid for m in config.methods}
    per_trial = parallel_map(lambda t: _trial_outcomes(config, x_n, t), range(config.mc_reps), workers)
    for outcomes in per_trial:
        for k, m, status, lo, hi in outcomes:
            c = cells[(k, m)]
            if status == "fail":
                c.failures += 1
                continue
            if status == "in":
                c.contained += 1
            else:
                c.missed += 1
            c.lengths.append(hi - lo)
            c.log_lengths.append(math.log(hi / lo) if lo > 0.0 else math.inf)
    return CoverageReport(config, x_n, list(cells.values()))


def k_sweep(
    sample: Sample | Sequence[float],
    x_target: float,
    k_grid: Sequence[int],
    B: int = 1000,
    level: float = 0.95,
    seed=0,
    *,
    method: str = "percentile",
    workers: int = 1,
    **options,
) -> list[dict]:
    """Point estimate, bootstrap interval and asymptotic interval of ``P(X > x_target)`` for each ``k``.

    All ``k`` share the same ``B`` resamples, keyed exactly as in
    :func:`~tailboot.bootstrap.bootstrap_ci_for` with the same ``seed``.
    Rows whose estimator or intervals fail carry an ``error`` message.
    """
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    ks = [check_k(k, sample.n) for k in k_grid]
    method = parse_method(method)
    stat = Statistic.tail_prob(x_target)
    plan = ResamplePlan(seed, B, stat)
    reps = replicate_fits(sample, ks, seed, B, workers)
    table = []
    for j, k in enumerate(ks):
        row = {"k": k}
        errors = []
        try:
            fit = fit_sorted(sample.sorted_values, k)
        except EstimationError as exc:
            row.update(error=f"{type(exc).__name__}: {exc}")
            table.append(row)
            continue
        est = estimate_tail_probability(fit, x_target)
        row.update(gamma=fit.gamma, **est.as_dict())
        try:
            boot = distribution_from_fits(fit, plan, [r[j] for r in reps])
            ci = interval(boot, method, level, **options)
            row.update(
                boot_method=ci.method.value,
                boot_lower=ci.lower,
                boot_upper=ci.upper,
                failures=ci.diagnostics.get("failures", boot.failures),
            )
        except EstimationError as exc:
            errors.append(f"bootstrap: {type(exc).__name__}: {exc}")
        try:
            ci = ci_asymptotic(est, level)
            row.update(asym_lower=ci.lower, asym_upper=ci.upper, asym_upper_capped=ci.diagnostics["upper_capped"])
        except EstimationError as exc:
            errors.append(f"asymptotic: {type(exc).__name__}: {exc}")
        row["error"] = "; ".join(errors) if errors else None
        table.append(row)
    return table

