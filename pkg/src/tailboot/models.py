"""Test distributions for simulation studies.

Each :class:`ModelSpec` knows its extreme value index, its distribution
function, and its upper quantile ``F^-1(1 - p)``. Sampling is by inverse
transform where the inverse is closed-form (Frechet, exponential, Pareto,
beta with ``a = 1``) and by NumPy's standard transforms otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import Sample
from .rng import substream

FAMILIES = ("student_t", "frechet", "exponential", "normal", "beta", "pareto")


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        need = {"student_t": 1, "frechet": 1, "exponential": 1, "normal": 0, "beta": 2, "pareto": 1}
        if len(self.params) != need[self.family]:
            raise ValueError(f"{self.family} takes {need[self.family]} parameter(s), got {self.params}")
        if any(not p > 0 for p in self.params):
            raise ValueError(f"parameters must be positive, got {self.params}")

    # constructors
    @classmethod
    def student_t(cls, df: float) -> "ModelSpec":
        return cls("student_t", (float(df),))

    @classmethod
    def frechet(cls, alpha: float) -> "ModelSpec":
        return cls("frechet", (float(alpha),))

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "ModelSpec":
        return cls("exponential", (float(rate),))

    @classmethod
    def normal(cls) -> "ModelSpec":
        return cls("normal")

    @classmethod
    def beta(cls, a: float, b: float) -> "ModelSpec":
        return cls("beta", (float(a), float(b)))

    @classmethod
    def pareto(cls, alpha: float) -> "ModelSpec":
        return cls("pareto", (float(alpha),))

    @classmethod
    def parse(cls, text: str) -> "ModelSpec":
        """``"frechet:2"``, ``"t:4"``, ``"exp:5"``, ``"normal"``, ``"beta:2,10"``, ``"pareto:1"``."""
        name, _, rest = text.strip().lower().partition(":")
        name = {"t": "student_t", "exp": "exponential", "norm": "normal", "n": "normal"}.get(name, name)
        params = tuple(float(p) for p in rest.split(",") if p.strip()) if rest else ()
        return cls(name, params)

    @property
    def label(self) -> str:
        short = {"student_t": "t", "exponential": "exp"}.get(self.family, self.family)
        if not self.params:
            return short
        return f"{short}:" + ",".join(f"{p:g}" for p in self.params)

    @property
    def true_gamma(self) -> float:
        f, p = self.family, self.params
        if f in ("student_t", "frechet", "pareto"):
            return 1.0 / p[0]
        if f == "beta":
            return -1.0 / p[1]
        return 0.0

    @property
    def _dist(self):
        f, p = self.family, self.params
        if f == "student_t":
            return stats.t(p[0])
        if f == "frechet":
            return stats.invweibull(p[0])
        if f == "exponential":
            return stats.expon(scale=1.0 / p[0])
        if f == "normal":
            return stats.norm()
        if f == "beta":
            return stats.beta(p[0], p[1])
        return stats.pareto(p[0])

    def cdf(self, x):
        return self._dist.cdf(x)

    def ppf(self, u):
        """Lower quantile ``F^-1(u)``; closed form where one exists."""
        f, p = self.family, self.params
        u = np.asarray(u, dtype=float)
        if f == "frechet":
            return (-np.log(u)) ** (-1.0 / p[0])
        if f == "exponential":
            return -np.log1p(-u) / p[0]
        if f == "pareto":
            return (1.0 - u) ** (-1.0 / p[0])
        if f == "beta" and p[0] == 1.0:
            # F(x) = 1 - (1 - x)^b
            return 1.0 - (1.0 - u) ** (1.0 / p[1])
        return self._dist.ppf(u)

    def quantile(self, p: float) -> float:
        return true_tail_quantile(self, p)


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    # uniforms on the open interval (0, 1)
    return (rng.integers(0, 2**53, n).astype(float) + 0.5) / 2.0**53


def draw_array(model: ModelSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    f, p = model.family, model.params
    if f == "student_t":
        return rng.standard_t(p[0], n)
    if f == "normal":
        return rng.standard_normal(n)
    if f == "beta" and p[0] != 1.0:
        return rng.beta(p[0], p[1], n)
    return model.ppf(_open_uniform(rng, n))


def draw(model: ModelSpec, n: int, seed) -> Sample:
    """``n`` i.i.d. draws from ``model``; deterministic in ``seed`` (int or key tuple)."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return Sample(draw_array(model, n, substream(seed)))


def true_tail_quantile(model: ModelSpec, p: float) -> float:
    """``F^-1(1 - p)`` for ``0 < p < 1``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    f, a = model.family, model.params
    if f == "frechet":
        return (-math.log1p(-p)) ** (-1.0 / a[0])
    if f == "exponential":
        return -math.log(p) / a[0]
    if f == "pareto":
        return p ** (-1.0 / a[0])
    if f == "beta" and a[0] == 1.0:
        return 1.0 - p ** (1.0 / a[1])
    # upper-tail inverse, computed from the survival side for accuracy at small p
    return float(model._dist.isf(p))


# the nine populations of the reference coverage design
REFERENCE_MODELS = (
    ModelSpec.student_t(2),
    ModelSpec.student_t(4),
    ModelSpec.student_t(8),
    ModelSpec.frechet(1),
    ModelSpec.frechet(2),
    ModelSpec.exponential(5),
    ModelSpec.normal(),
    ModelSpec.beta(2, 10),
    ModelSpec.beta(1, 2),
)
