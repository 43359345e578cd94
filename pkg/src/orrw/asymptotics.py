"""Limiting range constants.

``J(c, ell) = 4^c * int_0^inf x^(ell-1) (e^x / (e^x + 1)^2)^c dx`` governs the
moments of ``R_n / sqrt(n)``; ``K`` is the matching constant of the range
moment generating function, and ``variance_bounds`` brackets the limiting
excess ``|E[X_n^2]/n - 1|``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GL_NODES = 32
CLOSED_FORM_MAX_C = 30
TAIL_TOL = 1e-14
ERROR_CAP = 1e-9


class Method(str, enum.Enum):
    QUADRATURE = "quadrature"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class JValue:
    c: float
    ell: int
    value: float
    method: Method
    abs_error_bound: float

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise ValueError(f"J must be positive, got {self.value!r}")
        if self.abs_error_bound < 0.0:
            raise ValueError("error bound must be nonnegative")

    def __float__(self) -> float:
        return self.value


def _check(c: float, ell: int, ell_min: int = 1) -> tuple[float, int]:
    c = float(c)
    if not math.isfinite(c) or c <= 0.0:
        raise ValueError(f"c must be finite and > 0, got {c!r}")
    if int(ell) != ell or ell < ell_min:
        raise ValueError(f"ell must be an integer >= {ell_min}, got {ell!r}")
    return c, int(ell)


@lru_cache(maxsize=None)
def _gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(m)


def _log_integrand(x: np.ndarray, c: float, ell: int) -> np.ndarray:
    # log(x^(ell-1) * 4^c * (e^x/(e^x+1)^2)^c), written so nothing overflows
    out = -c * (x + 2.0 * np.log1p(np.exp(-x))) + 2.0 * c * math.log(2.0)
    if ell > 1:
        out += (ell - 1) * np.log(x)
    return out


def _panel_sum(edges: np.ndarray, c: float, ell: int) -> tuple[float, float]:
    """Composite Gauss-Legendre sum and the matching sum of ``|f|`` terms."""
    t, w = _gauss_legendre(GL_NODES)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    x = a + half * (t + 1.0)
    vals = half * w * np.exp(_log_integrand(x, c, ell))
    return math.fsum(vals.ravel()), float(np.abs(vals).sum())


def _tail_bound(c: float, ell: int, x_max: float) -> float:
    """``4^c * int_{x_max}^inf x^(ell-1) e^(-cx) dx``, which dominates the dropped tail."""
    m = ell - 1
    terms = [
        math.exp(
            2.0 * c * math.log(2.0)
            - c * x_max
            + math.lgamma(m + 1) - math.lgamma(m - j + 1)
            + (m - j) * math.log(x_max)
            - (j + 1) * math.log(c)
        )
        for j in range(m + 1)
    ]
    return math.fsum(terms)


def _x_max(c: float, ell: int) -> float:
    x_max = min(max((40.0 + ell * math.log1p(40.0 / c)) / c, 20.0), 2000.0)
    while _tail_bound(c, ell, x_max) > TAIL_TOL and x_max < 1e7:
        x_max *= 2.0
    return x_max


def _edges(x_max: float, first: float = 0.25, ratio: float = 1.5) -> np.ndarray:
    n = max(1, math.ceil(math.log(x_max / first) / math.log(ratio)))
    return np.concatenate([[0.0], np.geomspace(first, x_max, n + 1)])


def j_quadrature(c: float, ell: int) -> JValue:
    """``J(c, ell)`` by Gauss-Legendre quadrature on geometrically graded panels.

    The error bound adds the coarse/bisected panel discrepancy, a roundoff
    allowance and the analytic tail bound beyond the truncation point.
    """
    c, ell = _check(c, ell)
    x_max = _x_max(c, ell)
    edges = _edges(x_max)
    coarse, _ = _panel_sum(edges, c, ell)
    mids = 0.5 * (edges[:-1] + edges[1:])
    fine_edges = np.sort(np.concatenate([edges, mids]))
    fine, abs_sum = _panel_sum(fine_edges, c, ell)
    bound = abs(fine - coarse) + 8 * np.finfo(float).eps * abs_sum
    bound += _tail_bound(c, ell, x_max)
    return JValue(c, ell, fine, Method.QUADRATURE, float(bound))


def _log2_remainder(n: int) -> float:
    """``log 2 - sum_{i=1}^{n} 1/(i 2^i)``, summed directly as the series tail."""
    terms = []
    i = n + 1
    while True:
        term = 1.0 / (i * 2.0**i)
        terms.append(term)
        if term < 1e-20 * terms[0]:
            return math.fsum(terms)
        i += 1


def j_closed_form(c: int, ell: int) -> JValue:
    """``J(c, ell)`` for integer ``c`` in [1, 30] and ``ell`` in {1, 2} as a finite sum."""
    if float(c) != int(c) or not 1 <= int(c) <= CLOSED_FORM_MAX_C:
        raise ValueError(f"closed form needs an integer 1 <= c <= {CLOSED_FORM_MAX_C}")
    if ell not in (1, 2):
        raise ValueError("closed form is available for ell in {1, 2} only")
    c = int(c)
    if ell == 1:
        terms = [
            math.comb(c - 1, j) * 2.0 ** (j + 1) * (-1) ** (c - j) / (j - 2 * c + 1)
            for j in range(c)
        ]
        value = math.fsum(terms)
    else:
        terms = [
            math.comb(c - 1, j)
            * (-1) ** (c - j - 1)
            / (2 * c - j - 1)
            * _log2_remainder(2 * c - j - 2)
            for j in range(c)
        ]
        value = 4.0**c * math.fsum(terms)
    # alternating sum: scale the roundoff allowance by the largest term
    scale = max(abs(t) for t in terms) * (4.0**c if ell == 2 else 1.0)
    return JValue(float(c), ell, value, Method.CLOSED_FORM, 4 * c * np.finfo(float).eps * scale)


def j_value(c: float, ell: int, method: Method | str = Method.QUADRATURE) -> JValue:
    if Method(method) is Method.CLOSED_FORM:
        return j_closed_form(c, ell)
    return j_quadrature(c, ell)


def gamma_half(ell: int) -> float:
    """``Gamma(ell / 2)`` for a positive integer ``ell``."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if ell % 2 == 0:
        return float(math.factorial(ell // 2 - 1))
    value = math.sqrt(math.pi)
    for k in range(1, (ell - 1) // 2 + 1):
        value *= k - 0.5
    return value


def moment_constant(c: float, ell: int) -> float:
    """Limit of ``E[(R_n / sqrt(n))^ell]``."""
    c, ell = _check(c, ell)
    return j_quadrature(c, ell).value / (2.0 ** ((ell - 2) / 2) * gamma_half(ell))


def k_constant(c: float, ell: int) -> float:
    """``(ell+1) / 2^((ell+1)/2) * J(c, ell+1)``."""
    c, ell = _check(c, ell, ell_min=0)
    return (ell + 1) / 2.0 ** ((ell + 1) / 2) * j_quadrature(c, ell + 1).value


def variance_bounds(c: float) -> tuple[float, float]:
    """``(|(1-c)/2 J(c,2)|, |(1-c) J(c,2)|)``: lower and upper estimates of the
    limiting ``|E[(X_n/sqrt n)^2] - 1|``."""
    c, _ = _check(c, 2)
    j2 = j_quadrature(c, 2).value
    rhs = abs((1.0 - c) * j2)
    return 0.5 * rhs, rhs
