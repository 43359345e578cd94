"""``orrw`` command line: every subcommand writes one CSV table.

The first line of each CSV is a ``#``-prefixed JSON metadata record (tool,
version, RNG algorithm, seed and a canonical argument list that reproduces
the run), followed by a header row. Floats are written with 17 significant
digits so they round-trip exactly.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

from orrw import __version__, asymptotics, exact, montecarlo, series
from orrw.errors import NonConvergenceError, ResourceError
from orrw.walk import RNG_ALGORITHM, Params, simulate_path

SEED_ENV = "ORRW_SEED"
DEFAULT_SEED = 20190611
FIGURE1_DEFAULT_GRID = "0.25:3:0.25"
DESK_SCALE = 10**4
FULL_SCALE = 10**5

# flags that change how a run executes but not what it outputs
_EXECUTION_ONLY = {"workers", "out"}


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def _parse_cell(text: str):
    if text == "":
        return None
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


@dataclass
class CsvTable:
    meta: dict
    header: list[str]
    rows: list[list]

    def column(self, name: str) -> list:
        j = self.header.index(name)
        return [row[j] for row in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.header, row)) for row in self.rows]


def render_csv(meta: dict, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def read_csv(source: str | Path) -> CsvTable:
    """Parse a CSV written by this tool (a path or the text itself)."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    lines = text.split("\n")
    if not lines or not lines[0].startswith("# "):
        raise ValueError("missing metadata line")
    meta = json.loads(lines[0][2:])
    header = lines[1].split(",")
    rows = [[_parse_cell(cell) for cell in line.split(",")] for line in lines[2:] if line]
    return CsvTable(meta, header, rows)


# ---------------------------------------------------------------------------
# argument types


def _positive_real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value <= 0.0:
        raise argparse.ArgumentTypeError(f"must be finite and > 0: {text!r}")
    return value


def _finite_real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return value


def _count(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {text!r}")
    return value


def _s_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not values or not all(0.0 < v < 1.0 for v in values):
        raise argparse.ArgumentTypeError(f"s values must lie in (0, 1): {text!r}")
    return values


def parse_c_grid(text: str) -> list[float]:
    """``min:max:step`` (inclusive) or a comma list of values."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = math.floor((hi - lo) / step + 1e-9) + 1
            values = [round(lo + i * step, 12) for i in range(count)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad c grid: {text!r}") from None
    if not values or not all(math.isfinite(v) and v > 0 for v in values):
        raise argparse.ArgumentTypeError(f"c grid values must be > 0: {text!r}")
    return values


def _default_seed() -> int:
    env = os.environ.get(SEED_ENV)
    if not env:
        return DEFAULT_SEED
    try:
        return _seed(env)
    except argparse.ArgumentTypeError as exc:
        raise _UsageError(f"{SEED_ENV}: {exc}") from None


# ---------------------------------------------------------------------------
# parser


def _add_params(p: argparse.ArgumentParser, required: bool = True) -> None:
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--c", type=_positive_real, help="reinforcement parameter c > 0")
    group.add_argument("--gamma", type=_finite_real, help="alternative input, c = exp(-gamma)")


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed, default=None, help=f"master seed (env {SEED_ENV})")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orrw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"orrw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="one sampled path")
    _add_params(p)
    p.add_argument("--n", type=_count, default=100)
    _add_seed(p)
    _add_out(p)

    p = sub.add_parser("exact-range", help="exact law of R_n")
    _add_params(p)
    p.add_argument("--n", type=_count, default=100)
    _add_out(p)

    p = sub.add_parser("tau", help="law of the gambler's-ruin time tau_k")
    p.add_argument("--k", type=_count, required=True)
    p.add_argument("--nmax", type=_count, default=None)
    _add_out(p)

    p = sub.add_parser("sk", help="mean and variance (or law) of S_k")
    _add_params(p)
    p.add_argument("--k", type=_count, required=True)
    p.add_argument("--nmax", type=_count, default=None)
    p.add_argument("--law", action="store_true", help="emit the truncated law")
    _add_out(p)

    p = sub.add_parser("genfun", help="generating functions on an s grid")
    _add_params(p, required=False)
    p.add_argument("--fn", choices=["S", "g", "G", "H"], default="S")
    p.add_argument("--k", type=_count, default=None, help="k for S, x for g/G")
    p.add_argument("--ell", type=_count, default=0, help="ell for H")
    p.add_argument("--s", type=_s_list, required=True)
    _add_out(p)

    p = sub.add_parser("jconst", help="the constants J(c, ell)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--c", type=_positive_real)
    group.add_argument("--gamma", type=_finite_real)
    group.add_argument("--c-grid", type=parse_c_grid, dest="c_grid")
    p.add_argument("--ell", type=_count, default=1)
    p.add_argument("--method", choices=["quadrature", "closed"], default="quadrature")
    _add_out(p)

    p = sub.add_parser("moments", help="limiting range moments, optionally vs exact DP")
    _add_params(p)
    p.add_argument("--ell", type=_count, default=2)
    p.add_argument("--n", type=_count, default=None)
    _add_out(p)

    p = sub.add_parser("mc", help="Monte Carlo range moments and position variance")
    _add_params(p)
    p.add_argument("--n", type=_count, default=1000)
    p.add_argument("--reps", type=_count, default=10_000)
    p.add_argument("--ell", type=_count, default=2)
    _add_seed(p)
    p.add_argument("--workers", type=_count, default=1)
    _add_out(p)

    p = sub.add_parser("figure1", help="E[X_n^2]/n against c with the variance bounds")
    p.add_argument("--c-grid", type=parse_c_grid, dest="c_grid", default=None)
    p.add_argument("--n", type=_count, default=None)
    p.add_argument("--reps", type=_count, default=None)
    p.add_argument("--full-scale", action="store_true", help=f"n = reps = {FULL_SCALE}")
    _add_seed(p)
    p.add_argument("--workers", type=_count, default=1)
    _add_out(p)

    p = sub.add_parser("tauber", help="scaled H_ell(s) against its limit K_ell")
    _add_params(p)
    p.add_argument("--ell", type=_count, default=0)
    p.add_argument("--s", type=_s_list, default=[0.99, 0.999, 0.9999])
    _add_out(p)
    return parser


# ---------------------------------------------------------------------------
# commands


def _params(args) -> Params:
    if getattr(args, "gamma", None) is not None:
        return Params.from_gamma(args.gamma)
    return Params(args.c)


def _cmd_simulate(args):
    path = simulate_path(_params(args), args.n, args.seed)
    lo = hi = 0
    rows = []
    for t, x in enumerate(path.positions.tolist()):
        lo, hi = min(lo, x), max(hi, x)
        rows.append((t, x, lo, hi, hi - lo))
    return ["step", "position", "min", "max", "range"], rows


def _cmd_exact_range(args):
    params = _params(args)
    table = exact.range_distribution(params, args.n, ell_max=0)
    rows = [
        (params.c, args.n, r, p)
        for r, p in zip(table.dist.support.tolist(), table.dist.probs.tolist())
        if p > 0.0
    ]
    return ["c", "n", "r", "probability"], rows


def _cmd_tau(args):
    dist = exact.tau_distribution(args.k, args.nmax)
    rows = [(args.k, m, p) for m, p in zip(dist.support.tolist(), dist.probs.tolist())]
    return ["i", "m", "probability"], rows


def _cmd_sk(args):
    params = _params(args)
    dist = exact.s_k_distribution(params, args.k, args.nmax)
    if args.law:
        rows = [(args.k, m, p) for m, p in zip(dist.support.tolist(), dist.probs.tolist())]
        return ["k", "n", "probability"], rows
    row = (params.c, args.k, dist.last, dist.mean(), dist.var(), dist.deficit)
    return ["c", "k", "nmax", "mean", "variance", "deficit"], [row]


def _cmd_genfun(args):
    fn = args.fn
    if fn != "g" and args.c is None and args.gamma is None:
        raise _UsageError(f"--fn {fn} needs --c or --gamma")
    if fn == "H":
        params = _params(args)
        rows = []
        for s in args.s:
            point = series.h_ell(params, args.ell, s)
            rows.append((s, args.ell, point.value, point.k_terms))
        return ["s", "ell", "value", "k_terms"], rows
    if args.k is None:
        raise _UsageError(f"--fn {fn} needs --k")
    k = args.k
    if fn == "S":
        params = _params(args)
        values = [series.gen_S_k(params, k, s) for s in args.s]
    elif fn == "g":
        values = [series.g(k, s) for s in args.s]
    else:
        params = _params(args)
        values = [series.G(k, s, params) for s in args.s]
    return ["s", "k", "value"], [(s, k, v) for s, v in zip(args.s, values)]


def _cmd_jconst(args):
    if args.c_grid is not None:
        grid = args.c_grid
    else:
        grid = [_params(args).c]
    method = asymptotics.Method.CLOSED_FORM if args.method == "closed" else asymptotics.Method.QUADRATURE
    rows = []
    for c in grid:
        j = asymptotics.j_value(c, args.ell, method)
        rows.append((j.c, j.ell, j.method, j.value, j.abs_error_bound))
    return ["c", "ell", "method", "value", "abs_error_bound"], rows


def _cmd_moments(args):
    params = _params(args)
    table = exact.range_distribution(params, args.n, 0) if args.n else None
    rows = []
    for ell in range(1, args.ell + 1):
        row = [params.c, ell, asymptotics.j_quadrature(params.c, ell).value,
               asymptotics.moment_constant(params.c, ell)]
        if table is not None:
            row += [args.n, table.scaled_moment(ell)]
        rows.append(row)
    header = ["c", "ell", "j_value", "limit"]
    if table is not None:
        header += ["n", "exact"]
    return header, rows


def _cmd_mc(args):
    params = _params(args)
    estimates = montecarlo.estimate_all(
        params, args.n, args.reps, args.ell, args.seed, args.workers
    )
    rows = [(e.statistic, e.c, e.n, e.ell, e.reps, e.seed, e.mean, e.stderr) for e in estimates]
    return ["statistic", "c", "n", "ell", "reps", "seed", "mean", "stderr"], rows


def _cmd_figure1(args):
    rows = montecarlo.figure1_table(args.c_grid, args.n, args.reps, args.seed, args.workers)
    return (
        ["c", "n", "reps", "var_hat", "stderr", "lhs", "rhs"],
        [(r.c, r.n, r.reps, r.var_hat, r.stderr, r.lhs, r.rhs) for r in rows],
    )


def _cmd_tauber(args):
    rows = series.tauberian_check(_params(args), args.ell, args.s)
    return ["s", "scaled", "k_constant"], [(r.s, r.scaled, r.k_constant) for r in rows]


COMMANDS = {
    "simulate": _cmd_simulate,
    "exact-range": _cmd_exact_range,
    "tau": _cmd_tau,
    "sk": _cmd_sk,
    "genfun": _cmd_genfun,
    "jconst": _cmd_jconst,
    "moments": _cmd_moments,
    "mc": _cmd_mc,
    "figure1": _cmd_figure1,
    "tauber": _cmd_tauber,
}


class _UsageError(Exception):
    pass


def _resolve(args) -> None:
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    if args.command == "figure1":
        scale = FULL_SCALE if args.full_scale else DESK_SCALE
        args.n = args.n if args.n is not None else scale
        args.reps = args.reps if args.reps is not None else scale
        if args.c_grid is None:
            args.c_grid = parse_c_grid(FIGURE1_DEFAULT_GRID)
    if args.command in ("mc", "figure1") and args.reps < 2:
        raise _UsageError("--reps must be >= 2")
    if getattr(args, "n", None) is not None and args.command in ("exact-range", "mc", "figure1"):
        if args.n < 1:
            raise _UsageError("--n must be >= 1")


def canonical_argv(args) -> list[str]:
    """Argument list that reproduces ``args`` (execution-only flags left out)."""
    argv = [args.command]
    for key, value in sorted(vars(args).items()):
        if key in _EXECUTION_ONLY or key in ("command", "full_scale") or value is None:
            continue
        if value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif key == "c_grid" or key == "s":
            argv += [flag, ",".join(repr(float(v)) for v in value)]
        elif isinstance(value, float):
            argv += [flag, repr(value)]
        else:
            argv += [flag, format_value(value)]
    return argv


def metadata(args) -> dict:
    return {
        "tool": "orrw",
        "version": __version__,
        "rng": RNG_ALGORITHM,
        "seed": getattr(args, "seed", None),
        "args": canonical_argv(args),
    }


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _resolve(args)
        header, rows = COMMANDS[args.command](args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"orrw: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ResourceError, NonConvergenceError, OverflowError) as exc:
        print(f"orrw: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = render_csv(metadata(args), header, rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
