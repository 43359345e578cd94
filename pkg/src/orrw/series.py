"""Generating functions of the hitting times at real ``s`` in (0, 1).

``d_s`` solves ``cosh(d_s) = 1/s``. With it, ``g(x, s)`` is the generating
function of the gambler's-ruin time ``tau_x``, ``G(x, s, params)`` that of the
range increment time ``T_x``, and ``gen_S_k`` that of ``S_k``. ``x`` may be
any real ``>= 1``; only integer ``x`` carries a probabilistic meaning.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from orrw.asymptotics import k_constant
from orrw.errors import NonConvergenceError
from orrw.walk import Params

log = logging.getLogger(__name__)

K_START = 2**8
K_CAP = 2**24
TAIL_RTOL = 1e-14
STABLE_S = 0.99
STABLE_EXPONENT = 30.0


@dataclass(frozen=True)
class SeriesPoint:
    s: float
    value: float
    k_terms: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s!r}")
        if not math.isfinite(self.value):
            raise ValueError("generating function value is not finite")


def _check_s(s: float) -> float:
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")
    return s


def _check_x(x: float) -> float:
    x = float(x)
    if not x >= 1.0:
        raise ValueError(f"x must be >= 1, got {x!r}")
    return x


def _sqrt_one_minus_s2(s: float) -> float:
    return math.sqrt((1.0 - s) * (1.0 + s))


def d_of_s(s: float) -> float:
    """The ``d > 0`` with ``cosh(d) = 1/s``."""
    s = _check_s(s)
    # (1 + sqrt(1 - s^2)) / s = 1 + (1 - s + sqrt(1 - s^2)) / s
    return math.log1p((1.0 - s + _sqrt_one_minus_s2(s)) / s)


def _a(y: float) -> float:
    """``(e^y - 1) / (e^y + 1)``."""
    return math.tanh(0.5 * y)


def g_direct(x: float, s: float) -> float:
    """``(e^d + e^{d(x-1)}) / (1 + e^{dx})``; overflows once ``d x`` passes ~700."""
    x = _check_x(x)
    d = d_of_s(s)
    return (math.exp(d) + math.exp(d * (x - 1.0))) / (1.0 + math.exp(d * x))


def g_stable(x: float, s: float) -> float:
    """``(1 - a(d x) sqrt(1 - s^2)) / s`` with ``a(y) = tanh(y/2)``."""
    x = _check_x(x)
    d = d_of_s(s)
    return (1.0 - _a(d * x) * _sqrt_one_minus_s2(s)) / s


def g(x: float, s: float) -> float:
    """Generating function ``E[s^tau_x]`` of the gambler's-ruin exit time."""
    x = _check_x(x)
    s = _check_s(s)
    if s > STABLE_S or x * d_of_s(s) > STABLE_EXPONENT:
        return g_stable(x, s)
    return g_direct(x, s)


def G_direct(x: float, s: float, params: Params) -> float:
    c = params.c
    return s / (1.0 + c - c * s * g(x, s))


def G(x: float, s: float, params: Params) -> float:
    """Generating function ``E[s^T_x]`` of the range increment time."""
    x = _check_x(x)
    s = _check_s(s)
    return s / (1.0 + params.c * _a(d_of_s(s) * x) * _sqrt_one_minus_s2(s))


def _log_G_prefix(s: float, params: Params, k_max: int) -> np.ndarray:
    """``L[k-1] = sum_{i<k} log G_i(s)`` for ``k = 1..k_max``."""
    d = d_of_s(s)
    i = np.arange(1, k_max, dtype=np.float64)
    log_g = math.log(s) - np.log1p(params.c * np.tanh(0.5 * d * i) * _sqrt_one_minus_s2(s))
    return np.concatenate([[0.0], np.cumsum(log_g)])


def gen_S_k(params: Params, k: int, s: float) -> float:
    """``E[s^S_k] = s * prod_{i<k} G_i(s)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s = _check_s(s)
    return s * math.exp(_log_G_prefix(s, params, k)[-1])


def _h_terms(params: Params, ell: int, s: float, k_max: int) -> np.ndarray:
    k = np.arange(1, k_max + 1, dtype=np.float64)
    rising = np.ones_like(k)
    for j in range(ell):
        rising *= k + j
    return rising * s * np.exp(_log_G_prefix(s, params, k_max))


def h_ell(params: Params, ell: int, s: float, k_max: int | None = None) -> SeriesPoint:
    """``sum_n s^n E[R_n (R_n+1) ... (R_n+ell)]`` through its hitting-time series.

    With ``k_max`` given the series is cut there. Otherwise the cut doubles
    from 256 until the last term is below ``1e-14`` of the partial sum.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    s = _check_s(s)
    scale = (ell + 1) / (1.0 - s)
    if k_max is not None:
        if k_max < 1:
            raise ValueError("k_max must be >= 1")
        terms = _h_terms(params, ell, s, k_max)
        return SeriesPoint(s, scale * math.fsum(terms), k_max)
    k_max = K_START
    while k_max <= K_CAP:
        terms = _h_terms(params, ell, s, k_max)
        total = math.fsum(terms)
        # terms may rise before they decay; require the tail to be decreasing
        if terms[-1] <= TAIL_RTOL * total and terms[-1] <= terms[-2]:
            return SeriesPoint(s, scale * total, k_max)
        k_max *= 2
    raise NonConvergenceError(f"H_{ell}({s}) did not converge within {K_CAP} terms")


@dataclass(frozen=True)
class TauberRow:
    s: float
    scaled: float
    k_constant: float


def tauberian_check(
    params: Params, ell: int, s_grid: Iterable[float]
) -> list[TauberRow]:
    """``H_ell(s) (1-s)^((3+ell)/2)`` on ``s_grid`` next to its limit ``K_ell``."""
    target = k_constant(params.c, ell)
    rows = []
    for s in s_grid:
        value = h_ell(params, ell, s).value * (1.0 - s) ** ((3 + ell) / 2)
        rows.append(TauberRow(float(s), value, target))
    if not _approaches(rows):
        log.warning(
            "scaled H_%d is not monotone towards K_%d=%.6g on the grid (c=%g)",
            ell, ell, target, params.c,
        )
    return rows


def _approaches(rows: Sequence[TauberRow]) -> bool:
    ordered = sorted(rows, key=lambda row: row.s)
    gaps = [abs(row.scaled - row.k_constant) for row in ordered]
    return all(b <= a for a, b in zip(gaps, gaps[1:]))
