"""Exact laws of the range, the hitting times and the position.

Everything here is a ground-truth oracle for the generating functions and the
Monte Carlo estimators: brute-force path enumeration for tiny horizons, a
dynamic program over ``(X_n - m_n, R_n)`` for the range, and the renewal
decomposition ``S_k = 1 + T_1 + ... + T_{k-1}`` for the hitting times.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass

import numpy as np
from numba import njit

from orrw.errors import ResourceError
from orrw.walk import Params

ENUMERATION_CAP = 24
RANGE_DP_CAP = 100_000
X_MOMENT_CAP = 300
DEFAULT_TOL = 1e-10
HORIZON_START = 2**10
HORIZON_CAP = 2**22
# Per-row mass below which the range DP drops a row; the dropped mass is
# reported as deficit, bounded by 2 * n * PRUNE_EPS.
PRUNE_EPS = 1e-30


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite probability vector on ``offset, offset + 1, ...``.

    ``deficit`` is the mass that lies beyond the stored support. It is
    reported, never folded back in.
    """

    offset: int
    probs: np.ndarray
    deficit: float
    tolerance: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1:
            raise ValueError("probs must be one-dimensional")
        if probs.size and probs.min() < 0.0:
            raise ValueError("probabilities must be nonnegative")
        if self.deficit < -1e-12:
            raise ValueError(f"total mass exceeds 1 by {-self.deficit:.3g}")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_probs(
        cls, probs: np.ndarray, offset: int = 0, tolerance: float = DEFAULT_TOL
    ) -> DiscreteDistribution:
        probs = np.asarray(probs, dtype=np.float64)
        return cls(offset, probs, 1.0 - math.fsum(probs), tolerance)

    @classmethod
    def point_mass(cls, value: int) -> DiscreteDistribution:
        return cls(value, np.ones(1), 0.0)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.probs.size)

    @property
    def last(self) -> int:
        """Largest value covered by the stored vector."""
        return self.offset + self.probs.size - 1

    @property
    def flagged(self) -> bool:
        return self.deficit > self.tolerance

    def pmf(self, k: int) -> float:
        j = k - self.offset
        return float(self.probs[j]) if 0 <= j < self.probs.size else 0.0

    def cdf(self, k: int) -> float:
        """``P(X <= k)``; exact for ``k <= last``."""
        j = min(k - self.offset, self.probs.size - 1)
        return math.fsum(self.probs[: j + 1]) if j >= 0 else 0.0

    def moment(self, p: int) -> float:
        """Raw moment ``E[X^p; X <= last]`` of the stored part."""
        return math.fsum(self.probs * self.support.astype(np.float64) ** p)

    def mean(self) -> float:
        return self.moment(1)

    def var(self) -> float:
        shifted = self.support.astype(np.float64) - self.mean()
        return math.fsum(self.probs * shifted**2)

    def pgf(self, s: float) -> float:
        """``sum_k P(X = k) s^k`` over the stored support."""
        return math.fsum(self.probs * np.power(s, self.support.astype(np.float64)))


@dataclass(frozen=True)
class RangeTable:
    n: int
    c: float
    dist: DiscreteDistribution
    factorial_moments: np.ndarray

    def moment(self, ell: int) -> float:
        """``E[R_n^ell]``."""
        return self.dist.moment(ell)

    def scaled_moment(self, ell: int) -> float:
        """``E[(R_n / sqrt(n))^ell]``."""
        return self.dist.moment(ell) / self.n ** (ell / 2)


@dataclass(frozen=True)
class EnumerationResult:
    n: int
    c: float
    range_law: DiscreteDistribution
    x2_mean: float
    hitting_laws: dict[int, DiscreteDistribution]


def _rising(values: np.ndarray, ell: int) -> np.ndarray:
    """``v (v+1) ... (v+ell-1)``; the empty product is 1."""
    out = np.ones_like(values, dtype=np.float64)
    for j in range(ell):
        out *= values + j
    return out


def _factorial_moments(dist: DiscreteDistribution, ell_max: int) -> np.ndarray:
    r = dist.support.astype(np.float64)
    return np.array(
        [math.fsum(dist.probs * _rising(r, ell + 1)) for ell in range(ell_max + 1)]
    )


# ---------------------------------------------------------------------------
# brute force


def _p_up_vec(c: float, pos, lo, hi, t: int) -> np.ndarray:
    if t == 0:
        return np.full(pos.shape, 0.5)
    p = np.full(pos.shape, 0.5)
    p[pos == hi] = 1.0 / (1.0 + c)
    p[pos == lo] = c / (1.0 + c)
    return p


_CHUNK = 1 << 16


def enumerate_paths(params: Params, n: int) -> EnumerationResult:
    """Exact laws by summing over all ``2**n`` step sequences."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > ENUMERATION_CAP:
        raise ResourceError(f"enumeration is capped at n={ENUMERATION_CAP}, got {n}")
    c = params.c
    range_mass = np.zeros(n + 1)
    hit_mass = np.zeros((n + 2, n + 1))  # [k, t] -> P(S_k = t)
    x2 = [0.0]

    def expand(pos, lo, hi, prob, t):
        while t < n:
            if pos.size > _CHUNK:
                for a in range(0, pos.size, _CHUNK):
                    b = a + _CHUNK
                    expand(pos[a:b], lo[a:b], hi[a:b], prob[a:b], t)
                return
            p_up = _p_up_vec(c, pos, lo, hi, t)
            old_r = hi - lo
            pos = np.concatenate([pos + 1, pos - 1])
            lo = np.minimum(np.concatenate([lo, lo]), pos)
            hi = np.maximum(np.concatenate([hi, hi]), pos)
            prob = np.concatenate([prob * p_up, prob * (1.0 - p_up)])
            t += 1
            new_r = hi - lo
            grew = new_r > np.concatenate([old_r, old_r])
            np.add.at(hit_mass, (new_r[grew], t), prob[grew])
        np.add.at(range_mass, hi - lo, prob)
        x2[0] += math.fsum(prob * pos.astype(np.float64) ** 2)

    zero = np.zeros(1, dtype=np.int64)
    expand(zero, zero.copy(), zero.copy(), np.ones(1), 0)

    range_law = DiscreteDistribution.from_probs(range_mass)
    hitting = {}
    for k in range(1, n + 1):
        hitting[k] = DiscreteDistribution.from_probs(hit_mass[k, k:], offset=k)
    return EnumerationResult(n, c, range_law, x2[0], hitting)


# ---------------------------------------------------------------------------
# range dynamic program on (d, r) = (X - m, R)


@njit(cache=True)
def _tri(r):
    return r * (r + 1) // 2


@njit(cache=True)
def _range_dp(c, n, eps):
    p_ext = 1.0 / (1.0 + c)
    p_back = c / (1.0 + c)
    cap = 64
    cur = np.zeros(_tri(cap + 1))
    nxt = np.zeros(_tri(cap + 1))
    cur[_tri(1)] = 0.5
    cur[_tri(1) + 1] = 0.5
    lo = 1
    hi = 1
    pruned = 0.0
    for _t in range(2, n + 1):
        if hi + 1 >= cap:
            cap *= 2
            grown = np.zeros(_tri(cap + 1))
            grown[: cur.size] = cur
            cur = grown
            nxt = np.zeros(_tri(cap + 1))
        nxt[_tri(lo) : _tri(hi + 2)] = 0.0
        for r in range(lo, hi + 1):
            b = _tri(r)
            up = _tri(r + 1)
            p = cur[b]
            if p != 0.0:
                nxt[up] += p * p_ext
                nxt[b + 1] += p * p_back
            for d in range(1, r):
                p = cur[b + d]
                if p != 0.0:
                    h = 0.5 * p
                    nxt[b + d - 1] += h
                    nxt[b + d + 1] += h
            p = cur[b + r]
            if p != 0.0:
                nxt[up + r + 1] += p * p_ext
                nxt[b + r - 1] += p * p_back
        top = 0.0
        for j in range(_tri(hi + 1), _tri(hi + 2)):
            top += nxt[j]
        if top > 0.0:
            hi += 1
        while hi > lo:
            mass = 0.0
            for j in range(_tri(hi), _tri(hi + 1)):
                mass += nxt[j]
            if mass >= eps:
                break
            pruned += mass
            nxt[_tri(hi) : _tri(hi + 1)] = 0.0
            hi -= 1
        while lo < hi:
            mass = 0.0
            for j in range(_tri(lo), _tri(lo + 1)):
                mass += nxt[j]
            if mass >= eps:
                break
            pruned += mass
            nxt[_tri(lo) : _tri(lo + 1)] = 0.0
            lo += 1
        cur, nxt = nxt, cur
    law = np.zeros(n + 1)
    for r in range(lo, hi + 1):
        s = 0.0
        for j in range(_tri(r), _tri(r + 1)):
            s += cur[j]
        law[r] = s
    return law, pruned


def range_distribution(params: Params, n: int, ell_max: int = 4) -> RangeTable:
    """Exact law of ``R_n`` and ``E[R_n (R_n + 1) ... (R_n + ell)]``, ``ell <= ell_max``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > RANGE_DP_CAP:
        raise ResourceError(f"range DP is capped at n={RANGE_DP_CAP}, got {n}")
    law, pruned = _range_dp(params.c, n, PRUNE_EPS)
    dist = DiscreteDistribution(0, law, max(1.0 - math.fsum(law), pruned))
    return RangeTable(n, params.c, dist, _factorial_moments(dist, ell_max))


# ---------------------------------------------------------------------------
# position second moment: DP on (d, r) carrying E[m] and E[m^2] per state


@njit(cache=True)
def _x_moment_dp(c, n):
    p_ext = 1.0 / (1.0 + c)
    p_back = c / (1.0 + c)
    size = n + 2
    P = np.zeros((size, size))
    A1 = np.zeros((size, size))
    A2 = np.zeros((size, size))
    # step 1: up gives (d, r, m) = (1, 1, 0), down gives (0, 1, -1)
    P[1, 1] = 0.5
    P[1, 0] = 0.5
    A1[1, 0] = -0.5
    A2[1, 0] = 0.5
    for t in range(2, n + 1):
        Q = np.zeros((size, size))
        B1 = np.zeros((size, size))
        B2 = np.zeros((size, size))
        for r in range(1, t):
            for d in range(r + 1):
                p = P[r, d]
                if p == 0.0:
                    continue
                a1 = A1[r, d]
                a2 = A2[r, d]
                if d == 0:
                    # extend downwards: the minimum moves, m -> m - 1
                    w = p_ext
                    Q[r + 1, 0] += w * p
                    B1[r + 1, 0] += w * (a1 - p)
                    B2[r + 1, 0] += w * (a2 - 2.0 * a1 + p)
                    w = p_back
                    Q[r, 1] += w * p
                    B1[r, 1] += w * a1
                    B2[r, 1] += w * a2
                elif d == r:
                    w = p_ext
                    Q[r + 1, r + 1] += w * p
                    B1[r + 1, r + 1] += w * a1
                    B2[r + 1, r + 1] += w * a2
                    w = p_back
                    Q[r, r - 1] += w * p
                    B1[r, r - 1] += w * a1
                    B2[r, r - 1] += w * a2
                else:
                    for dd in (d - 1, d + 1):
                        Q[r, dd] += 0.5 * p
                        B1[r, dd] += 0.5 * a1
                        B2[r, dd] += 0.5 * a2
        P = Q
        A1 = B1
        A2 = B2
    total = 0.0
    for r in range(size):
        for d in range(r + 1):
            # X = m + d
            total += A2[r, d] + 2.0 * d * A1[r, d] + d * d * P[r, d]
    return total


def x_moment(params: Params, n: int) -> float:
    """Exact ``E[X_n^2]``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > X_MOMENT_CAP:
        raise ResourceError(f"position DP is capped at n={X_MOMENT_CAP}, got {n}")
    if n == 0:
        return 0.0
    return float(_x_moment_dp(params.c, n))


# ---------------------------------------------------------------------------
# hitting-time decomposition


def _auto_horizon(
    build: Callable[[int], DiscreteDistribution], tol: float
) -> DiscreteDistribution:
    """Smallest power-of-two horizon from 2**10 whose deficit drops below ``tol``."""
    h = HORIZON_START
    while True:
        dist = build(h)
        if dist.deficit < tol or h >= HORIZON_CAP:
            return dist
        h *= 2


@njit(cache=True)
def _gamblers_ruin(i, n_max):
    # SRW on 0..i started at 1, absorbed at 0 and i
    probs = np.zeros(n_max + 1)
    inner = np.zeros(i + 1)
    inner[1] = 1.0
    nxt = np.zeros(i + 1)
    for t in range(1, n_max + 1):
        nxt[:] = 0.0
        absorbed = 0.0
        for j in range(1, i):
            h = 0.5 * inner[j]
            if h == 0.0:
                continue
            if j - 1 == 0:
                absorbed += h
            else:
                nxt[j - 1] += h
            if j + 1 == i:
                absorbed += h
            else:
                nxt[j + 1] += h
        probs[t] = absorbed
        inner, nxt = nxt, inner
    return probs


def tau_distribution(
    i: int, n_max: int | None = None, tol: float = DEFAULT_TOL
) -> DiscreteDistribution:
    """Law of the exit time of simple random walk from 0 through ``{-1, i-1}``."""
    if i < 1:
        raise ValueError("i must be >= 1")
    if i == 1:
        return DiscreteDistribution(0, np.ones(1), 0.0, tol)
    if n_max is None:
        return _auto_horizon(lambda h: tau_distribution(i, h, tol), tol)
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    return DiscreteDistribution.from_probs(_gamblers_ruin(i, n_max), 0, tol)


@njit(cache=True)
def _compound_geometric(d, q, m_max):
    # u_m = [m == 0] + q * sum_{j>=1} d_j u_{m-j}
    last = d.size - 1
    while last > 0 and d[last] == 0.0:
        last -= 1
    u = np.zeros(m_max + 1)
    for m in range(m_max + 1):
        acc = 1.0 if m == 0 else 0.0
        top = min(m, last)
        s = 0.0
        for j in range(1, top + 1):
            s += d[j] * u[m - j]
        u[m] = acc + q * s
    return u


def t_distribution(
    params: Params, i: int, n_max: int | None = None, tol: float = DEFAULT_TOL
) -> DiscreteDistribution:
    """Law of ``T_i``, the time for the range to grow from ``i`` to ``i + 1``.

    ``T_i - 1`` is a geometric number of excursions ``1 + tau_i`` with
    success probability ``1/(1+c)``.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    if n_max is None:
        return _auto_horizon(lambda h: t_distribution(params, i, h, tol), tol)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    c = params.c
    tau = tau_distribution(i, n_max, tol)
    d = np.zeros(n_max)
    # law of 1 + tau on 0..n_max-1
    d[1 : min(n_max, tau.last + 2)] = tau.probs[: n_max - 1]
    u = _compound_geometric(d, c / (1.0 + c), n_max - 1)
    return DiscreteDistribution.from_probs(u / (1.0 + c), offset=1, tolerance=tol)


def _convolve_truncated(
    a: DiscreteDistribution, b: DiscreteDistribution, n_max: int, tol: float
) -> DiscreteDistribution:
    offset = a.offset + b.offset
    keep = n_max - offset + 1
    if keep <= 0:
        return DiscreteDistribution(offset, np.zeros(0), 1.0, tol)
    probs = np.convolve(a.probs[:keep], b.probs[:keep])[:keep]
    return DiscreteDistribution.from_probs(probs, offset, tol)


def iter_s_k(
    params: Params, k_max: int, n_max: int, tol: float = DEFAULT_TOL
) -> Iterator[DiscreteDistribution]:
    """Yield the laws of ``S_1, ..., S_{k_max}`` truncated at ``n_max``."""
    s = DiscreteDistribution(1, np.ones(1), 0.0, tol)
    yield s
    for i in range(1, k_max):
        s = _convolve_truncated(s, t_distribution(params, i, n_max, tol), n_max, tol)
        yield s


def s_k_distribution(
    params: Params, k: int, n_max: int | None = None, tol: float = DEFAULT_TOL
) -> DiscreteDistribution:
    """Law of ``S_k``, the first time the range equals ``k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return DiscreteDistribution(1, np.ones(1), 0.0, tol)
    if n_max is None:
        return _auto_horizon(lambda h: s_k_distribution(params, k, h, tol), tol)
    *_, last = iter_s_k(params, k, n_max, tol)
    return last
