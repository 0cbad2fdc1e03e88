from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np
import pytest
from scipy import stats

from conftest import make_boot, make_fit, rel_err
from tailboot.bootstrap import (
    Method,
    ResamplePlan,
    Statistic,
    bootstrap_ci_for,
    bootstrap_distribution,
    ci_asymptotic,
    ci_efron_percentile,
    ci_percentile,
    ci_t,
    empirical_quantile,
    interval,
    normal_quantile,
    parse_method,
    resample,
)
from tailboot.core import Sample, fit_sorted
from tailboot.errors import AllReplicatesFailed, EmptyBootstrap, ZeroBaseEstimate
from tailboot.models import ModelSpec, draw, true_tail_quantile
from tailboot.rng import DEFAULT_SEED
from tailboot.tailfuncs import estimate_tail_probability, sigma_sq, w_gamma


def loc_boot(values) -> object:
    fits = [make_fit(0.5, loc_b=float(v)) for v in values]
    return make_boot(make_fit(0.5, loc_b=float(np.median(values))), fits, Statistic.loc())


def prob_boot(base_fit, x, gammas, scales, locs):
    fits = [make_fit(g, scale_a=a, loc_b=b, n=base_fit.n, k=base_fit.k) for g, a, b in zip(gammas, scales, locs)]
    return make_boot(base_fit, fits, Statistic.tail_prob(x))


class TestEmpiricalQuantile:
    def test_ceiling_rule(self):
        z = np.arange(1, 101, dtype=float)
        assert empirical_quantile(z, 0.05) == 5.0
        assert empirical_quantile(z, 0.95) == 95.0
        assert empirical_quantile(z, 0.025) == 3.0
        z = np.arange(1, 1001, dtype=float)
        assert empirical_quantile(z, 0.025) == 25.0
        assert empirical_quantile(z, 0.975) == 975.0

    def test_ends_and_monotone(self, rng):
        z = np.sort(rng.normal(size=137))
        assert empirical_quantile(z, 1e-12) == z[0]
        assert empirical_quantile(z, 0.0) == z[0]
        assert empirical_quantile(z, 1.0) == z[-1]
        qs = [empirical_quantile(z, a) for a in np.linspace(0.0, 1.0, 501)]
        assert all(a <= b for a, b in zip(qs, qs[1:]))

    def test_empty(self):
        with pytest.raises(EmptyBootstrap):
            empirical_quantile(np.array([]), 0.5)


class TestResample:
    def test_single_atom(self):
        for seed in range(5):
            assert list(resample([3.5], seed)) == [3.5]

    def test_deterministic(self):
        a = resample([1.0, 2.0, 3.0], 11)
        b = resample([1.0, 2.0, 3.0], 11)
        assert np.array_equal(a, b)
        assert np.array_equal(resample([1.0, 2.0, 3.0], (11, 4)), resample([1.0, 2.0, 3.0], (11, 4)))

    def test_returns_sample_for_sample(self):
        out = resample(Sample([1.0, 2.0, 3.0, 4.0]), 0)
        assert isinstance(out, Sample) and out.n == 4
        assert set(out.values) <= {1.0, 2.0, 3.0, 4.0}

    def test_uniform_indices(self):
        # 10^5 resamples of {1,2,3,4}: each value's total count within 4 SE of N/4
        values = np.array([1.0, 2.0, 3.0, 4.0])
        counts = np.zeros(4)
        for r in range(100_000):
            counts += np.bincount(resample(values, (5, r)).astype(int) - 1, minlength=4)
        total = counts.sum()
        se = math.sqrt(total * 0.25 * 0.75)
        assert np.all(np.abs(counts - total / 4) < 4 * se)
        chi2 = float(np.sum((counts - total / 4) ** 2 / (total / 4)))
        assert chi2 < stats.chi2.ppf(0.999, 3)


class TestBootstrapDistribution:
    def test_constant_sample(self):
        plan = ResamplePlan(1, 200, Statistic.gamma_hat())
        with pytest.raises(AllReplicatesFailed):
            bootstrap_distribution([2.0] * 50, 10, plan)

    def test_deterministic_and_worker_invariant(self, frechet_sample):
        plan = ResamplePlan(99, 300, Statistic.tail_prob(40.0))
        a = bootstrap_distribution(frechet_sample, 100, plan)
        b = bootstrap_distribution(frechet_sample, 100, plan)
        c = bootstrap_distribution(frechet_sample, 100, plan, workers=3)
        assert a.replicate_values.tobytes() == b.replicate_values.tobytes() == c.replicate_values.tobytes()
        assert a.failures + a.replicate_values.size == plan.replicates

    def test_replicate_seeding_contract(self, frechet_sample):
        plan = ResamplePlan(42, 5, Statistic.gamma_hat())
        boot = bootstrap_distribution(frechet_sample, 50, plan)
        for r in range(5):
            fit = fit_sorted(np.sort(resample(frechet_sample, (42, r)).values), 50)
            assert boot.raw_values[r] == fit.gamma

    def test_sorted(self, frechet_sample):
        boot = bootstrap_distribution(frechet_sample, 80, ResamplePlan(3, 100, Statistic.scale()))
        assert np.all(np.diff(boot.replicate_values) >= 0)

    def test_location_law_matches_exact_binomial(self):
        # With distinct data, P*(X*[n-k] <= x_(j)) = P(Bin(n, j/n) >= n - k) exactly.
        n, k, B = 500, 50, 2000
        sample = draw(ModelSpec.pareto(1), n, (DEFAULT_SEED, 7, 0))
        boot = bootstrap_distribution(sample, k, ResamplePlan((DEFAULT_SEED, 7, 0, 1), B, Statistic.loc()))
        xs = sample.sorted_values
        ecdf = np.searchsorted(boot.replicate_values, xs, side="right") / B
        exact_cdf = stats.binom.sf(n - k - 1, n, np.arange(1, n + 1) / n)
        ks = float(np.max(np.abs(ecdf - exact_cdf)))
        assert ks < 1.63 / math.sqrt(B)

    def test_location_pivot_against_sampling_law(self):
        # desk-scale check of the bootstrap law of sqrt(k)(b* - b)/a against fresh samples
        model = ModelSpec.pareto(1)
        n, k, B, M = 500, 50, 1000, 2000
        sk = math.sqrt(k)
        sample = draw(model, n, (DEFAULT_SEED, 7, 0))
        boot = bootstrap_distribution(sample, k, ResamplePlan((DEFAULT_SEED, 7, 0, 1), B, Statistic.loc()))
        base = boot.base_fit
        boot_law = sk * (boot.raw_values - base.loc_b) / base.scale_a
        u = true_tail_quantile(model, k / n)
        mc_law = []
        for m in range(M):
            fit = fit_sorted(draw(model, n, (DEFAULT_SEED, 8, m)).sorted_values, k)
            mc_law.append(sk * (fit.loc_b - u) / fit.scale_a)
        ks = stats.ks_2samp(boot_law, mc_law).statistic
        assert ks <= 0.08, f"KS distance {ks:.4f} > 0.08"


class TestEfron:
    def test_order_statistics(self):
        ci = ci_efron_percentile(loc_boot(range(1, 101)), 0.90)
        assert (ci.lower, ci.upper) == (5.0, 95.0)
        assert ci.method is Method.EFRON

    def test_constant(self):
        ci = ci_efron_percentile(loc_boot([2.5] * 40), 0.95)
        assert (ci.lower, ci.upper) == (2.5, 2.5)

    def test_contains_point_estimate(self):
        model = ModelSpec.frechet(2)
        rng = np.random.default_rng(2024)
        contained = 0
        cases = 100
        for i in range(cases):
            sample = draw(model, 1000, (DEFAULT_SEED, 30, i))
            k = int(rng.integers(30, 300))
            x = float(true_tail_quantile(model, float(10 ** rng.uniform(-4, -2))))
            level = float(rng.uniform(0.5, 0.99))
            ci = bootstrap_ci_for(Statistic.tail_prob(x), "efron", sample, k, 1000, (DEFAULT_SEED, 31, i), level)
            contained += ci.contains(ci.diagnostics["estimate"])
        assert contained >= 0.99 * cases

    def test_gamma_target_reduces_to_replicate_quantiles(self, frechet_sample):
        stat = Statistic.gamma_hat()
        ci = bootstrap_ci_for(stat, "efron", frechet_sample, 100, 400, 17, 0.9)
        boot = bootstrap_distribution(frechet_sample, 100, ResamplePlan(17, 400, stat))
        assert ci.lower == boot.quantile(0.05) and ci.upper == boot.quantile(0.95)


class TestPercentile:
    def test_reduces_to_squared_ratio(self, rng):
        for _ in range(200):
            g = float(rng.uniform(-0.4, 1.5))
            base_fit = make_fit(g, scale_a=1.0, loc_b=1.0, n=1000, k=100)
            x = float(rng.uniform(2.0, 30.0))
            base = estimate_tail_probability(base_fit, x)
            if base.p_hat == 0.0:
                continue
            m = 201
            boot = prob_boot(
                base_fit,
                x,
                g + rng.normal(0, 0.15, m),
                np.exp(rng.normal(0, 0.1, m)),
                1.0 + rng.normal(0, 0.05, m),
            )
            if np.any(boot.raw_values <= 0.0):
                continue
            level = float(rng.uniform(0.5, 0.99))
            ci = ci_percentile(boot, base, level)
            a = (1.0 - level) / 2.0
            p = base.p_hat
            assert rel_err(ci.lower, min(p * p / boot.quantile(1 - a), 1.0)) < 1e-12
            assert rel_err(ci.upper, min(p * p / boot.quantile(a), 1.0)) < 1e-12

    def test_degenerate_replicates(self):
        base_fit = make_fit(0.5, n=1000, k=100)
        base = estimate_tail_probability(base_fit, 5.0)
        boot = make_boot(base_fit, [base_fit] * 50, Statistic.tail_prob(5.0))
        ci = ci_percentile(boot, base, 0.95)
        assert ci.lower == ci.upper == base.p_hat

    def test_zero_base(self):
        base_fit = make_fit(-0.5, n=1000, k=100)
        base = estimate_tail_probability(base_fit, 10.0)
        boot = make_boot(base_fit, [make_fit(0.2)] * 10, Statistic.tail_prob(10.0))
        with pytest.raises(ZeroBaseEstimate):
            ci_percentile(boot, base, 0.95)

    def test_zero_replicates_dropped(self):
        base_fit = make_fit(0.3, n=1000, k=100)
        base = estimate_tail_probability(base_fit, 2.0)
        ok = [make_fit(0.3 + 0.01 * i, n=1000, k=100) for i in range(8)]
        beyond = [make_fit(-0.9, n=1000, k=100)] * 2  # endpoint 1 + 1/0.9 < 2: p* = 0
        boot = make_boot(base_fit, ok + beyond, Statistic.tail_prob(2.0))
        ci = ci_percentile(boot, base, 0.8)
        assert ci.diagnostics["zero_replicates"] == 2
        with pytest.raises(AllReplicatesFailed):
            ci_percentile(make_boot(base_fit, ok[:4] + beyond * 3, Statistic.tail_prob(2.0)), base, 0.8)

    def test_order_invariance(self, frechet_sample):
        boot = bootstrap_distribution(frechet_sample, 100, ResamplePlan(5, 200, Statistic.tail_prob(30.0)))
        base = estimate_tail_probability(boot.base_fit, 30.0)
        perm = np.random.default_rng(0).permutation(len(boot.fits))
        shuffled = make_boot(boot.base_fit, [boot.fits[i] for i in perm], Statistic.tail_prob(30.0))
        for method in ("efron", "percentile", "t"):
            a, b = interval(boot, method, 0.9), interval(shuffled, method, 0.9)
            assert (a.lower, a.upper) == (b.lower, b.upper)
        assert ci_percentile(boot, base, 0.9).upper <= 1.0


class TestStudentT:
    def test_literal_equals_percentile(self, frechet_sample):
        for x in (10.0, 40.0, 200.0):
            boot = bootstrap_distribution(frechet_sample, 120, ResamplePlan(8, 300, Statistic.tail_prob(x)))
            base = estimate_tail_probability(boot.base_fit, x)
            for opts in ({}, {"replicate_scaling": True}):
                lit = ci_t(boot, base, 0.95, studentized=False, **opts)
                pct = ci_percentile(boot, base, 0.95, **opts)
                assert lit.lower == pct.lower and lit.upper == pct.upper

    def test_constant_gamma_studentized_equals_literal(self, rng):
        base_fit = make_fit(0.4, n=1000, k=100)
        base = estimate_tail_probability(base_fit, 8.0)
        m = 300
        boot = prob_boot(base_fit, 8.0, [0.4] * m, np.exp(rng.normal(0, 0.1, m)), 1 + rng.normal(0, 0.05, m))
        stu = ci_t(boot, base, 0.9, studentized=True)
        lit = ci_t(boot, base, 0.9, studentized=False)
        assert rel_err(stu.lower, lit.lower) < 1e-14 and rel_err(stu.upper, lit.upper) < 1e-14

    def test_drops_out_of_domain_replicates(self):
        base_fit = make_fit(0.2, n=1000, k=100)
        base = estimate_tail_probability(base_fit, 1.5)
        fits = [make_fit(0.2 + 0.01 * i, n=1000, k=100) for i in range(9)] + [make_fit(-0.6, n=1000, k=100)]
        boot = make_boot(base_fit, fits, Statistic.tail_prob(1.5))
        assert boot.raw_values[-1] > 0.0
        ci = ci_t(boot, base, 0.8)
        assert ci.diagnostics["dropped_replicates"] == 1
        assert ci.diagnostics["studentized"] is True


class TestAsymptotic:
    def test_hand_example(self):
        fit = make_fit(1.0, n=1000, k=100)
        base = estimate_tail_probability(fit, 9.0)
        s = math.sqrt(sigma_sq(1.0)) * w_gamma(1.0, 10.0) / 10.0
        level = 2.0 * NormalDist().cdf(0.5 / s) - 1.0
        ci = ci_asymptotic(base, level)
        assert ci.diagnostics["z"] * ci.diagnostics["s"] == pytest.approx(0.5, rel=1e-12)
        assert ci.lower == pytest.approx(0.01 / 1.5, rel=1e-10)
        assert ci.upper == pytest.approx(0.02, rel=1e-10)
        assert round(ci.lower, 5) == 0.00667

    def test_collapses_at_zero_level(self):
        base = estimate_tail_probability(make_fit(0.5), 10.0)
        ci = ci_asymptotic(base, 1e-12)
        assert rel_err(ci.lower, base.p_hat) < 1e-10 and rel_err(ci.upper, base.p_hat) < 1e-10

    def test_upper_cap(self):
        base = estimate_tail_probability(make_fit(2.0, n=1000, k=2), 1e6)
        ci = ci_asymptotic(base, 0.95)
        assert ci.upper == 1.0 and ci.diagnostics["upper_capped"]
        full = ci_asymptotic(estimate_tail_probability(make_fit(0.5), 10.0), 1.0)
        assert (full.lower, full.upper) == (0.0, 1.0)

    def test_normal_quantile(self):
        assert normal_quantile(0.95) == pytest.approx(1.959963984540054, rel=1e-12)
        assert normal_quantile(1.0) == math.inf


class TestPivotTargets:
    def test_gamma_basic_interval(self, frechet_sample):
        stat = Statistic.gamma_hat()
        boot = bootstrap_distribution(frechet_sample, 100, ResamplePlan(21, 400, stat))
        ci = interval(boot, "percentile", 0.9)
        theta = boot.base_fit.gamma
        assert ci.lower == pytest.approx(2 * theta - boot.quantile(0.95), abs=1e-14)
        assert ci.upper == pytest.approx(2 * theta - boot.quantile(0.05), abs=1e-14)

    @pytest.mark.parametrize("stat", [Statistic.scale(), Statistic.loc(), Statistic.high_quantile(1e-4)])
    def test_other_targets(self, frechet_sample, stat):
        ci = bootstrap_ci_for(stat, "percentile", frechet_sample, 100, 300, 4, 0.95)
        assert math.isfinite(ci.lower) and math.isfinite(ci.upper) and ci.lower < ci.upper
        assert ci.diagnostics["failures"] == 0 and ci.diagnostics["replicates"] == 300

    def test_quantile_normalizers_agree_for_identical_replicates(self):
        base = make_fit(0.5, scale_a=2.0, loc_b=3.0)
        fits = [make_fit(0.5, scale_a=2.0, loc_b=3.0 + 0.01 * i) for i in range(-20, 21)]
        boot = make_boot(base, fits, Statistic.high_quantile(1e-3))
        a = interval(boot, "percentile", 0.9, normalizer="replicate")
        b = interval(boot, "percentile", 0.9, normalizer="base")
        assert rel_err(a.lower, b.lower) < 1e-14 and rel_err(a.upper, b.upper) < 1e-14

    def test_t_rejected_for_other_targets(self, frechet_sample):
        with pytest.raises(ValueError):
            bootstrap_ci_for(Statistic.gamma_hat(), "t", frechet_sample, 100, 50, 1)


class TestFacade:
    def test_method_aliases(self):
        assert parse_method("basic") is Method.PERCENTILE
        assert parse_method("normal") is Method.ASYMPTOTIC
        with pytest.raises(ValueError):
            parse_method("bca")

    def test_deterministic(self, frechet_sample):
        args = (Statistic.tail_prob(50.0), "t", frechet_sample, 100, 300, 77, 0.95)
        a = bootstrap_ci_for(*args)
        b = bootstrap_ci_for(*args, workers=4)
        assert a == b

    def test_too_many_failures(self):
        base = make_fit(0.5)
        boot = make_boot(base, [make_fit(0.5)] * 4, Statistic.tail_prob(3.0), failures=6)
        with pytest.raises(AllReplicatesFailed):
            interval(boot, "percentile", 0.9)
