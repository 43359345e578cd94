"""The twelve acceptance criteria, one test each.

Every test prints a PASS/FAIL line and records it for the terminal summary.
Runtime limits are checked alongside the numerical tolerances.
"""

import contextlib
import math
import time

import numpy as np
import pytest

from orrw import Params, WalkState, martingale_drift
from orrw.asymptotics import j_closed_form, j_quadrature, k_constant, moment_constant
from orrw.cli import main, read_csv
from orrw.exact import (
    enumerate_paths,
    iter_s_k,
    range_distribution,
    s_k_distribution,
    x_moment,
)
from orrw.series import gen_S_k, h_ell

FIGURE1_ARGS = [
    "figure1", "--c-grid", "0.25,0.5,1,2,3", "--n", "10000", "--reps", "10000", "--seed", "2024",
]


@contextlib.contextmanager
def criterion(results, number, title, limit):
    """Time the body, check the runtime limit, and record a PASS/FAIL line."""
    notes = []
    start = time.perf_counter()
    try:
        yield notes
        elapsed = time.perf_counter() - start
        assert elapsed < limit, f"runtime {elapsed:.1f}s exceeds {limit}s"
    except AssertionError as exc:
        elapsed = time.perf_counter() - start
        detail = f"{exc} ({elapsed:.1f}s)".replace("\n", " ")
        results.append((number, title, False, detail))
        print(f"FAIL {number}. {title}: {detail}")
        raise
    detail = "; ".join(notes + [f"{elapsed:.1f}s"])
    results.append((number, title, True, detail))
    print(f"PASS {number}. {title}: {detail}")


def run_cli(capsys, argv):
    rc = main(argv)
    out, err = capsys.readouterr()
    assert rc == 0, err
    return out


def test_01_closed_form_constants(acceptance):
    with criterion(acceptance, 1, "J_1(1) = 2 and J_2(1) = 4 ln 2", 1) as notes:
        j1, j2 = j_quadrature(1, 1).value, j_quadrature(1, 2).value
        err = max(abs(j1 - 2), abs(j2 - 4 * math.log(2)))
        assert err <= 1e-10, f"error {err:.3g}"
        notes.append(f"max error {err:.2g}")


def test_02_closed_form_vs_quadrature(acceptance):
    with criterion(acceptance, 2, "closed form vs quadrature, c = 1..10", 5) as notes:
        worst = max(
            abs(j_closed_form(c, ell).value - j_quadrature(c, ell).value)
            for c in range(1, 11)
            for ell in (1, 2)
        )
        assert worst <= 1e-9, f"max gap {worst:.3g}"
        notes.append(f"max gap {worst:.2g}")


def test_03_s_k_mean_and_variance(acceptance):
    with criterion(acceptance, 3, "S_k mean and variance at c = 1, k <= 20", 30) as notes:
        worst = 0.0
        for k in range(1, 21):
            dist = s_k_distribution(Params(1.0), k, tol=1e-13)
            # truncated mass could sit anywhere beyond the last support point
            slack = dist.deficit * dist.last**2
            mean_gap = abs(dist.mean() - k * (k + 1) / 2)
            var_gap = abs(dist.var() - (k - 1) * k * (k + 1) * (k + 2) / 12)
            assert mean_gap <= 1e-6 + slack, f"k={k} mean gap {mean_gap:.3g}"
            assert var_gap <= 1e-6 + slack, f"k={k} variance gap {var_gap:.3g}"
            worst = max(worst, mean_gap, var_gap)
        notes.append(f"max gap {worst:.2g}")


def test_04_c_one_limits(acceptance):
    with criterion(acceptance, 4, "c = 1 range moments at n = 10^4", 60) as notes:
        table = range_distribution(Params(1.0), 10**4)
        m1, m2 = table.scaled_moment(1), table.scaled_moment(2)
        r1 = m1 / math.sqrt(8 / math.pi) - 1
        r2 = m2 / (4 * math.log(2)) - 1
        assert abs(r1) <= 0.02, f"E[R]/sqrt(n) = {m1:.6f}"
        assert abs(r2) <= 0.02, f"E[R^2]/n = {m2:.6f}"
        notes.append(f"E[R]/sqrt(n) = {m1:.5f} ({r1:+.2%}), E[R^2]/n = {m2:.5f} ({r2:+.2%})")


def test_05_c_two_limit(acceptance):
    with criterion(acceptance, 5, "c = 2 mean range at n = 10^4", 60) as notes:
        m1 = range_distribution(Params(2.0), 10**4, ell_max=1).scaled_moment(1)
        target = moment_constant(2.0, 1)
        rel = m1 / target - 1
        assert abs(rel) <= 0.03, f"{m1:.6f} vs {target:.6f}"
        notes.append(f"{m1:.5f} vs {target:.5f} ({rel:+.2%})")


def test_06_oracle_equivalence(acceptance):
    with criterion(acceptance, 6, "enumeration = range DP = position DP, n <= 12", 60) as notes:
        worst = 0.0
        for c in (0.5, 1.0, 2.0, 4.0):
            params = Params(c)
            for n in range(1, 13):
                brute = enumerate_paths(params, n)
                dp = range_distribution(params, n).dist
                size = max(brute.range_law.probs.size, dp.probs.size)
                a = np.pad(brute.range_law.probs, (0, size - brute.range_law.probs.size))
                b = np.pad(dp.probs, (0, size - dp.probs.size))
                gap = max(float(np.max(np.abs(a - b))), abs(brute.x2_mean - x_moment(params, n)))
                assert gap <= 1e-12, f"c={c} n={n} gap {gap:.3g}"
                worst = max(worst, gap)
        notes.append(f"max gap {worst:.2g}")


def test_07_generating_function_identity(acceptance):
    with criterion(acceptance, 7, "gen_S_k vs convolved S_k series, k <= 15", 30) as notes:
        worst = 0.0
        for c in (0.5, 1.0, 2.0):
            params = Params(c)
            for k, dist in enumerate(iter_s_k(params, 15, 2**13), start=1):
                for s in (0.3, 0.7, 0.95):
                    gap = abs(gen_S_k(params, k, s) - dist.pgf(s))
                    assert gap <= 1e-9 + dist.deficit, f"c={c} k={k} s={s} gap {gap:.3g}"
                    worst = max(worst, gap)
        notes.append(f"max gap {worst:.2g}")


def test_08_tauberian_scaling(acceptance):
    with criterion(acceptance, 8, "H_0(s)(1-s)^(3/2) near s = 1 at c = 1", 30) as notes:
        s = 1 - 1e-4
        scaled = h_ell(Params(1.0), 0, s).value * (1 - s) ** 1.5
        k0 = k_constant(1.0, 0)
        rel = scaled / k0 - 1
        assert abs(rel) <= 0.02, f"{scaled:.6f} vs {k0:.6f}"
        notes.append(f"{scaled:.5f} vs {k0:.5f} ({rel:+.2%})")


def test_09_martingale_drifts(acceptance):
    with criterion(acceptance, 9, "compensated drifts vanish, |x| <= 50", 5) as notes:
        worst, count = 0.0, 0
        for c in (0.1, 0.5, 1.0, 2.0, 5.0):
            params = Params(c)
            for lo in range(-50, 1):
                for hi in range(0, 51):
                    if hi == lo:
                        continue
                    for x in range(lo, hi + 1):
                        state = WalkState(x, lo, hi, 2 * (hi - lo) + abs(x))
                        d1, d2 = martingale_drift(state, params)
                        worst = max(worst, abs(d1), abs(d2))
                        count += 1
        assert worst <= 1e-12, f"max drift {worst:.3g}"
        notes.append(f"{count} states, max drift {worst:.2g}")


def test_10_hitting_time_identity(acceptance):
    with criterion(acceptance, 10, "P(R_n >= k) = P(S_k <= n), n <= 200", 30) as notes:
        n_max = 200
        worst = 0.0
        for c in (0.5, 1.0, 2.0):
            params = Params(c)
            laws = list(iter_s_k(params, n_max + 1, n_max))
            for n in range(1, n_max + 1):
                probs = range_distribution(params, n, ell_max=0).dist.probs
                tail = np.cumsum(probs[::-1])[::-1]
                for k in range(1, n_max + 2):
                    p_range = tail[k] if k < tail.size else 0.0
                    gap = abs(p_range - laws[k - 1].cdf(n))
                    worst = max(worst, gap)
            assert worst <= 1e-10, f"c={c} max gap {worst:.3g}"
        notes.append(f"max gap {worst:.2g}")


@pytest.fixture(scope="module")
def figure1_runs():
    return {}


def _figure1(capsys, runs, workers):
    if workers not in runs:
        start = time.perf_counter()
        out = run_cli(capsys, FIGURE1_ARGS + ["--workers", str(workers)])
        runs[workers] = (out, time.perf_counter() - start)
    return runs[workers]


def test_11_figure1(acceptance, capsys, figure1_runs):
    with criterion(acceptance, 11, "variance ordering and envelopes, n = reps = 10^4", 600) as notes:
        out, _ = _figure1(capsys, figure1_runs, 1)
        rows = {r["c"]: r for r in read_csv(out).records()}
        var = [rows[c]["var_hat"] for c in (0.25, 0.5, 1.0, 2.0, 3.0)]
        assert all(b < a for a, b in zip(var, var[1:])), f"not decreasing: {var}"
        one = rows[1.0]
        assert abs(one["var_hat"] - 1) <= 3 * one["stderr"], f"var_hat(1) = {one['var_hat']}"
        for c in (0.5, 2.0):
            r = rows[c]
            excess = abs(r["var_hat"] - 1)
            lo, hi = 0.5 * r["lhs"], 1.5 * r["rhs"]
            assert lo <= excess <= hi, f"c={c} excess {excess:.4f} outside [{lo:.4f}, {hi:.4f}]"
            notes.append(f"c={c} excess {excess:.3f} in [{lo:.3f}, {hi:.3f}]")
        notes.append("var_hat " + ", ".join(f"{v:.4f}" for v in var))


def test_12_determinism(acceptance, capsys, figure1_runs):
    with criterion(acceptance, 12, "figure1 CSV identical across worker counts", 600) as notes:
        single, _ = _figure1(capsys, figure1_runs, 1)
        for workers in (2, 3):
            out, elapsed = _figure1(capsys, figure1_runs, workers)
            assert out == single, f"workers={workers} output differs"
            notes.append(f"workers={workers} identical ({elapsed:.1f}s)")
