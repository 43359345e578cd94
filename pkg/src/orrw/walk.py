"""ORRW transition law, reproducible path simulation and martingale checks.

The walk starts at 0. A step towards an already traversed edge has weight
``c``, a step across a fresh edge has weight 1. On the integers the visited
set is always the interval ``[min, max]``, so ``WalkState`` is a sufficient
statistic for the next step.

Random numbers come from numpy's Philox4x64-10 counter-based generator keyed
by the pair ``(seed, stream)``; a step goes up iff the next double
``u = (next_uint64 >> 11) * 2**-53`` satisfies ``u < p_up``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from orrw.errors import ResourceError

RNG_ALGORITHM = "philox4x64-10:key=(seed,stream):u53"
MAX_PATH_STEPS = 50_000_000

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Params:
    """Reinforcement parameter ``c > 0`` of the walk."""

    c: float

    def __post_init__(self) -> None:
        c = self.c
        if isinstance(c, bool) or not isinstance(c, (int, float, np.floating, np.integer)):
            raise TypeError(f"c must be a real number, got {type(c).__name__}")
        c = float(c)
        if not math.isfinite(c) or c <= 0.0:
            raise ValueError(f"c must be finite and > 0, got {c!r}")
        object.__setattr__(self, "c", c)

    @classmethod
    def from_gamma(cls, gamma: float) -> Params:
        """Build from the hungry-walk parametrisation, ``c = exp(-gamma)``."""
        gamma = float(gamma)
        if not math.isfinite(gamma):
            raise ValueError(f"gamma must be finite, got {gamma!r}")
        return cls(math.exp(-gamma))

    @property
    def gamma(self) -> float:
        return -math.log(self.c)

    @property
    def p_extend(self) -> float:
        """Probability of crossing a fresh edge when standing on the boundary."""
        return 1.0 / (1.0 + self.c)


@dataclass(frozen=True)
class WalkState:
    position: int = 0
    min: int = 0
    max: int = 0
    steps: int = 0

    def __post_init__(self) -> None:
        if not (self.min <= self.position <= self.max):
            raise ValueError(f"need min <= position <= max, got {self}")
        if self.min > 0 or self.max < 0:
            raise ValueError(f"need min <= 0 <= max, got {self}")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        span = self.max - self.min
        if span > self.steps or (self.steps >= 1 and span < 1):
            raise ValueError(f"range {span} is not reachable in {self.steps} steps")

    def range(self) -> int:
        return self.max + abs(self.min)

    def advance(self, up: bool) -> WalkState:
        x = self.position + (1 if up else -1)
        return WalkState(x, min(self.min, x), max(self.max, x), self.steps + 1)


@dataclass(frozen=True)
class Path:
    params: Params
    positions: np.ndarray
    seed: int
    stream: int = 0
    rng: str = field(default=RNG_ALGORITHM)

    @property
    def n(self) -> int:
        return len(self.positions) - 1

    def ranges(self) -> np.ndarray:
        """Running range ``R_t`` for ``t = 0..n``."""
        pos = self.positions
        return np.maximum.accumulate(pos) - np.minimum.accumulate(pos)

    def final_state(self) -> WalkState:
        pos = self.positions
        return WalkState(int(pos[-1]), int(pos.min()), int(pos.max()), self.n)


def _p_up(c: float, position: int, lo: int, hi: int, steps: int) -> float:
    if steps == 0 or lo < position < hi:
        return 0.5
    if position == hi:
        return 1.0 / (1.0 + c)
    return c / (1.0 + c)


def step_weights(state: WalkState, params: Params) -> tuple[float, float]:
    """Return ``(p_up, p_down)`` for the next step from ``state``."""
    p_up = _p_up(params.c, state.position, state.min, state.max, state.steps)
    return p_up, 1.0 - p_up


def stream_uniforms(seed: int, stream: int, n: int) -> np.ndarray:
    """First ``n`` uniforms of the Philox stream keyed by ``(seed, stream)``."""
    key = np.array([int(seed) & _MASK64, int(stream) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(n)


@njit(cache=True)
def _walk_positions(u, c):
    n = u.shape[0]
    out = np.zeros(n + 1, dtype=np.int64)
    x = 0
    lo = 0
    hi = 0
    p_max = 1.0 / (1.0 + c)
    p_min = c / (1.0 + c)
    for t in range(n):
        if t == 0 or (lo < x < hi):
            p = 0.5
        elif x == hi:
            p = p_max
        else:
            p = p_min
        if u[t] < p:
            x += 1
            if x > hi:
                hi = x
        else:
            x -= 1
            if x < lo:
                lo = x
        out[t + 1] = x
    return out


@njit(cache=True)
def walk_endpoints(u, c):
    """Final position and range of one walk per row of ``u``."""
    reps, n = u.shape
    xs = np.zeros(reps, dtype=np.int64)
    rs = np.zeros(reps, dtype=np.int64)
    p_max = 1.0 / (1.0 + c)
    p_min = c / (1.0 + c)
    for r in range(reps):
        x = 0
        lo = 0
        hi = 0
        for t in range(n):
            if t == 0 or (lo < x < hi):
                p = 0.5
            elif x == hi:
                p = p_max
            else:
                p = p_min
            if u[r, t] < p:
                x += 1
                if x > hi:
                    hi = x
            else:
                x -= 1
                if x < lo:
                    lo = x
        xs[r] = x
        rs[r] = hi - lo
    return xs, rs


def simulate_path(params: Params, n: int, seed: int, stream: int = 0) -> Path:
    """Sample ``n`` steps of the walk from the stream ``(seed, stream)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > MAX_PATH_STEPS:
        raise ResourceError(f"n={n} exceeds the path cap {MAX_PATH_STEPS}")
    u = stream_uniforms(seed, stream, n)
    return Path(params, _walk_positions(u, params.c), int(seed), int(stream))


def hitting_times(path: Path | np.ndarray) -> np.ndarray:
    """First times ``S_1 < S_2 < ...`` at which the range reaches 1, 2, ...

    Returned array index ``k - 1`` holds ``S_k``; its length is the final range.
    """
    pos = path.positions if isinstance(path, Path) else np.asarray(path)
    if pos.size == 0:
        return np.zeros(0, dtype=np.int64)
    r = np.maximum.accumulate(pos) - np.minimum.accumulate(pos)
    # r is nondecreasing with unit jumps, so every jump is a new record.
    return np.flatnonzero(np.diff(r) > 0).astype(np.int64) + 1


def martingale_drift(state: WalkState, params: Params) -> tuple[float, float]:
    """Conditional one-step drifts of the two compensated martingales.

    ``N = X - k * (#visits to max - #visits to min)`` with ``k = (1-c)/(1+c)``,
    and ``N2 = X^2 - n - 2k * sum |X| 1{X on the boundary}``.
    Both returned drifts vanish for the ORRW transition law.
    """
    if state.steps < 1:
        raise ValueError("drift is defined once the walk has left the origin")
    c = params.c
    p_up, p_down = step_weights(state, params)
    x = state.position
    k = (1.0 - c) / (1.0 + c)
    at_max = 1.0 if x == state.max else 0.0
    at_min = 1.0 if x == state.min else 0.0
    dx = p_up - p_down
    dx2 = p_up * (2 * x + 1) + p_down * (1 - 2 * x)
    drift_n = dx - k * (at_max - at_min)
    drift_n2 = dx2 - 1.0 - 2.0 * k * abs(x) * (at_max + at_min)
    return drift_n, drift_n2
