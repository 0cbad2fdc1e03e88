"""Monte-Carlo draws of the Wiener functionals behind the estimators' limit laws.

For a standard Wiener process ``W`` on ``[0, 1]`` and ``g- = min(0, gamma)``,
``g+ = max(0, gamma)``::

    P = int_0^1 (W(s) s^-(g- + 1) - W(1)) ds
    Q = 2 int_0^1 ((s^-g- - 1)/g-) (W(s) s^-(g- + 1) - W(1)) ds
    R = (1 - g-)^2 (1 - 2g-) ((1 - 2g-) Q / 2 - 2P)
    Gamma = g+ P + R
    A = g+ W(1) + (1 - g-)(3 - 4g-) P - (1 - g-)(1 - 2g-)^2 Q / 2
    B = W(1)

``Gamma`` is the limit of ``sqrt(k)(gamma_hat - gamma)``, ``A`` of
``sqrt(k)(a_hat/a - 1)``, ``B`` of the normalized threshold, and
``Gamma + g-^2 B - g- A`` of the quantile and tail-probability pivots.
The weight ``(s^-g- - 1)/g-`` becomes ``-log s`` at ``g- = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .rng import chunked, parallel_map, substream
from .tailfuncs import GAMMA_TOL

DEFAULT_GRID = 2**15
FUNCTIONAL_NAMES = ("P", "Q", "R", "Gamma", "A", "B")
_PATH_CHUNK = 128


@dataclass(frozen=True, eq=False)
class WienerPath:
    """``W`` sampled on ``grid`` (strictly increasing, ending at 1; ``W(0) = 0`` implied)."""

    grid: np.ndarray
    values: np.ndarray
    seed: object = None

    def __post_init__(self):
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if self.grid[0] <= 0.0 or np.any(np.diff(self.grid) <= 0.0) or self.grid[-1] != 1.0:
            raise ValueError("grid must be strictly increasing in (0, 1] and end at 1")

    def subsample(self, step: int) -> "WienerPath":
        """The same path observed on every ``step``-th grid point (counted from the end)."""
        idx = np.arange(self.grid.size - 1, -1, -step)[::-1]
        return WienerPath(self.grid[idx], self.values[idx], self.seed)


class Functionals(NamedTuple):
    P: float
    Q: float
    R: float
    Gamma: float
    A: float
    B: float


def uniform_grid(grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    return np.arange(1, grid_size + 1, dtype=float) / grid_size


def _increments(rng: np.random.Generator, grid_size: int) -> np.ndarray:
    return rng.standard_normal(grid_size) * np.sqrt(1.0 / grid_size)


def sample_wiener(grid_size: int, seed) -> WienerPath:
    """Standard Wiener process on the uniform grid ``i / grid_size``, ``i = 1..grid_size``."""
    grid = uniform_grid(grid_size)
    values = np.cumsum(_increments(substream(seed), grid_size))
    return WienerPath(grid, values, seed)


def q_weight(s: np.ndarray, gamma_minus: float) -> np.ndarray:
    """``(s^-g - 1)/g``, or ``-log s`` for ``|g|`` below the switch tolerance."""
    log_s = np.log(s)
    if abs(gamma_minus) < GAMMA_TOL:
        return -log_s
    return np.expm1(-gamma_minus * log_s) / gamma_minus


def combine(P, Q, B, gamma: float):
    """``(R, Gamma, A)`` from ``(P, Q, B)``; works elementwise on arrays."""
    gm = min(0.0, gamma)
    gp = max(0.0, gamma)
    R = (1.0 - gm) ** 2 * (1.0 - 2.0 * gm) * (0.5 * (1.0 - 2.0 * gm) * Q - 2.0 * P)
    G = gp * P + R
    A = gp * B + (1.0 - gm) * (3.0 - 4.0 * gm) * P - 0.5 * (1.0 - gm) * (1.0 - 2.0 * gm) ** 2 * Q
    return R, G, A


def _midpoint_terms(grid: np.ndarray, values: np.ndarray, gamma: float):
    """Midpoint-rule pieces shared by P and Q.

    ``values`` may be 2-d (paths x grid). Returns the integrand of ``P`` at
    the cell midpoints, the cell widths and the ``Q`` weights.
    """
    gm = min(0.0, gamma)
    left = np.concatenate(([0.0], grid[:-1]))
    mids = 0.5 * (left + grid)
    widths = grid - left
    v = np.atleast_2d(values)
    v_left = np.concatenate((np.zeros((v.shape[0], 1)), v[:, :-1]), axis=1)
    w_mid = 0.5 * (v_left + v)
    w1 = v[:, -1:]
    f = w_mid * mids ** (-(gm + 1.0)) - w1
    return f, widths, q_weight(mids, gm)


def _functionals_batch(grid: np.ndarray, values: np.ndarray, gamma: float) -> np.ndarray:
    f, widths, qw = _midpoint_terms(grid, values, gamma)
    P = f @ widths
    Q = 2.0 * (f @ (qw * widths))
    B = np.atleast_2d(values)[:, -1]
    R, G, A = combine(P, Q, B, gamma)
    return np.column_stack((P, Q, R, G, A, B))


def limit_functionals(path: WienerPath, gamma: float) -> Functionals:
    """``(P, Q, R, Gamma, A, B)`` for one path, by the composite midpoint rule on its grid.

    ``W`` at a cell midpoint is the linear interpolation of the endpoint
    values, so the singular weight is never evaluated at ``s = 0``.
    """
    row = _functionals_batch(path.grid, path.values, gamma)[0]
    return Functionals(*(float(x) for x in row))


def first_cell_contribution(path: WienerPath, gamma: float) -> float:
    """Contribution of the cell ``[0, s_1]`` to ``P``."""
    f, widths, _ = _midpoint_terms(path.grid, path.values, gamma)
    return float(f[0, 0] * widths[0])


@dataclass(frozen=True, eq=False)
class LimitLawDraws:
    gamma: float
    draws: np.ndarray  # shape (paths, 6), columns FUNCTIONAL_NAMES
    paths: int
    grid_size: int

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, FUNCTIONAL_NAMES.index(name)]

    def __getattr__(self, name):
        if name in FUNCTIONAL_NAMES:
            return self.column(name)
        raise AttributeError(name)

    def pivot(self) -> np.ndarray:
        """``Gamma + g-^2 B - g- A``: limit of the quantile and tail-probability pivots."""
        gm = min(0.0, self.gamma)
        return self.column("Gamma") + gm * gm * self.column("B") - gm * self.column("A")

    def summary(self) -> list[dict]:
        """Ensemble mean and variance (with standard errors) of each functional and the pivot."""
        rows = []
        cols = {name: self.column(name) for name in FUNCTIONAL_NAMES}
        cols["pivot"] = self.pivot()
        m = self.paths
        for name, x in cols.items():
            if m == 0:
                rows.append({"name": name, "mean": None, "variance": None, "se_mean": None, "se_variance": None})
                continue
            mean = float(np.mean(x))
            var = float(np.var(x, ddof=1)) if m > 1 else 0.0
            centered = x - mean
            m4 = float(np.mean(centered**4))
            se_var = float(np.sqrt(max(m4 - var * var, 0.0) / m)) if m > 1 else None
            rows.append(
                {
                    "name": name,
                    "mean": mean,
                    "variance": var,
                    "se_mean": float(np.sqrt(var / m)),
                    "se_variance": se_var,
                }
            )
        return rows


def limit_law_sample(
    gamma: float, paths: int, grid_size: int = DEFAULT_GRID, seed=0, workers: int = 1
) -> LimitLawDraws:
    """``paths`` independent draws of the functionals; path ``i`` uses ``substream(seed, i)``."""
    if paths < 0:
        raise ValueError("paths must be >= 0")
    grid = uniform_grid(grid_size)
    base = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)

    def run(rows: range) -> np.ndarray:
        incs = np.stack([_increments(substream(base + (i,)), grid_size) for i in rows])
        return _functionals_batch(grid, np.cumsum(incs, axis=1), gamma)

    if paths == 0:
        draws = np.empty((0, len(FUNCTIONAL_NAMES)))
    else:
        draws = np.vstack(parallel_map(run, chunked(paths, _PATH_CHUNK), workers))
    return LimitLawDraws(gamma=gamma, draws=draws, paths=paths, grid_size=grid_size)
