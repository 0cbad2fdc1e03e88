from __future__ import annotations

import math

import numpy as np
import pytest

from tailboot.bootstrap import BootstrapDistribution, ResamplePlan, Statistic
from tailboot.core import TailFit


def make_fit(gamma: float, scale_a: float = 1.0, loc_b: float = 0.0, n: int = 1000, k: int = 100) -> TailFit:
    """A hand-built fit with the requested estimates (``h_n`` and ``m_n`` chosen consistently when possible)."""
    gp = max(gamma, 0.0)
    gm = gamma - gp
    # choose m so that gamma_minus_from_moments(h, m) == gm; fall back to h = 1 when gp == 0
    h = gp if gp > 0.0 else 1.0
    ratio = 1.0 - 0.5 / (1.0 - gm)
    m = h * h / ratio
    return TailFit(n=n, k=k, h_n=h, m_n=m, gamma_plus=gp, gamma_minus=gm, gamma=gamma, scale_a=scale_a, loc_b=loc_b)


def make_boot(base: TailFit, replicate_fits, statistic: Statistic, failures: int = 0) -> BootstrapDistribution:
    """A bootstrap distribution assembled from given replicate fits (no resampling)."""
    fits = tuple(replicate_fits)
    raw = np.array([statistic.evaluate(f) for f in fits], dtype=float)
    plan = ResamplePlan(0, len(fits) + failures, statistic)
    return BootstrapDistribution(
        replicate_values=np.sort(raw), failures=failures, base_fit=base, plan=plan, fits=fits, raw_values=raw
    )


def rel_err(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def frechet_sample():
    from tailboot.models import ModelSpec, draw

    return draw(ModelSpec.frechet(2), 1000, (7, 0))


__all__ = ["make_fit", "make_boot", "rel_err", "math"]
