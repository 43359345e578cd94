"""Reproducible Monte Carlo estimates of range moments and ``E[X_n^2]/n``.

Replicate ``r`` of a run with master seed ``seed`` is exactly
``simulate_path(params, n, seed, stream=r)``. Per-replicate values are
gathered in replicate order and reduced with ``math.fsum``, so the output
depends only on ``(params, n, reps, seed)`` and never on the worker count.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from orrw.asymptotics import variance_bounds
from orrw.errors import ResourceError
from orrw.walk import Params, stream_uniforms, walk_endpoints

MAX_WORK = 10**12  # reps * n
BATCH = 512


class Statistic(str, enum.Enum):
    RANGE_MOMENT = "range_moment"
    POSITION_VARIANCE = "position_variance"


@dataclass(frozen=True)
class MomentEstimate:
    statistic: Statistic
    c: float
    n: int
    ell: int
    reps: int
    seed: int
    mean: float
    stderr: float
    # diagnostic only: sample mean of X_n / sqrt(n) for position_variance
    sample_mean: float | None = None

    def __post_init__(self) -> None:
        if self.reps < 2:
            raise ValueError("need at least two replicates")
        if self.stderr < 0.0:
            raise ValueError("stderr must be nonnegative")


def _batch_endpoints(c: float, n: int, seed: int, start: int, stop: int):
    u = np.empty((stop - start, n))
    for j, stream in enumerate(range(start, stop)):
        u[j] = stream_uniforms(seed, stream, n)
    return walk_endpoints(u, c)


def simulate_endpoints(
    params: Params, n: int, reps: int, seed: int, workers: int = 1, batch: int = BATCH
) -> tuple[np.ndarray, np.ndarray]:
    """Final positions and ranges of replicates ``0..reps-1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if reps < 2:
        raise ValueError("need at least two replicates")
    if reps * n > MAX_WORK:
        raise ResourceError(f"reps * n = {reps * n} exceeds {MAX_WORK}")
    bounds = [(a, min(a + batch, reps)) for a in range(0, reps, batch)]
    jobs = [(params.c, n, seed, a, b) for a, b in bounds]
    if workers <= 1:
        parts = [_batch_endpoints(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_batch_endpoints, *zip(*jobs)))
    xs = np.concatenate([p[0] for p in parts])
    rs = np.concatenate([p[1] for p in parts])
    return xs, rs


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    k = values.size
    mean = math.fsum(values) / k
    ss = math.fsum((values - mean) ** 2)
    return mean, math.sqrt(ss / (k - 1) / k)


def _range_estimates(params, n, reps, ell_max, seed, rs) -> list[MomentEstimate]:
    scaled = rs.astype(np.float64) / math.sqrt(n)
    out = []
    for ell in range(1, ell_max + 1):
        mean, se = _mean_stderr(scaled**ell)
        out.append(
            MomentEstimate(Statistic.RANGE_MOMENT, params.c, n, ell, reps, seed, mean, se)
        )
    return out


def _position_estimate(params, n, reps, seed, xs) -> MomentEstimate:
    z = xs.astype(np.float64) / math.sqrt(n)
    # raw second moment: the walk is symmetric, so E[X_n] = 0
    mean, se = _mean_stderr(z**2)
    return MomentEstimate(
        Statistic.POSITION_VARIANCE, params.c, n, 2, reps, seed, mean, se,
        sample_mean=math.fsum(z) / z.size,
    )


def estimate_range_moments(
    params: Params, n: int, reps: int, ell_max: int, seed: int, workers: int = 1
) -> list[MomentEstimate]:
    """Sample means of ``(R_n / sqrt(n))^ell`` for ``ell = 1..ell_max``."""
    if ell_max < 1:
        raise ValueError("ell_max must be >= 1")
    _, rs = simulate_endpoints(params, n, reps, seed, workers)
    return _range_estimates(params, n, reps, ell_max, seed, rs)


def estimate_position_variance(
    params: Params, n: int, reps: int, seed: int, workers: int = 1
) -> MomentEstimate:
    """Sample mean of ``X_n^2 / n``."""
    xs, _ = simulate_endpoints(params, n, reps, seed, workers)
    return _position_estimate(params, n, reps, seed, xs)


def estimate_all(
    params: Params, n: int, reps: int, ell_max: int, seed: int, workers: int = 1
) -> list[MomentEstimate]:
    """Range moments and the position variance from one shared set of walks."""
    xs, rs = simulate_endpoints(params, n, reps, seed, workers)
    rows = _range_estimates(params, n, reps, ell_max, seed, rs)
    rows.append(_position_estimate(params, n, reps, seed, xs))
    return rows


@dataclass(frozen=True)
class Figure1Row:
    c: float
    n: int
    reps: int
    var_hat: float
    stderr: float
    lhs: float
    rhs: float

    @property
    def excess(self) -> float:
        return abs(self.var_hat - 1.0)


def figure1_table(
    c_grid: Iterable[float], n: int, reps: int, seed: int, workers: int = 1
) -> list[Figure1Row]:
    """Estimated ``E[(X_n/sqrt n)^2]`` per ``c`` next to the bounds on ``|V - 1|``.

    Every ``c`` reuses the same master seed, so the rows share random numbers.
    """
    grid: Sequence[float] = list(c_grid)
    if not grid:
        raise ValueError("c_grid must not be empty")
    rows = []
    for c in grid:
        est = estimate_position_variance(Params(c), n, reps, seed, workers)
        lhs, rhs = variance_bounds(c)
        rows.append(Figure1Row(float(c), n, reps, est.mean, est.stderr, lhs, rhs))
    return rows
