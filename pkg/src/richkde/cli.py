"""Command-line front end.

Subcommands: ``sample``, ``eval``, ``weights``, ``benchmark``, ``sweep``.
Exit codes: 0 success, 2 input-format error, 3 numerical-configuration error,
4 I/O error.  Numbers are written in shortest round-trip form.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import sys
from decimal import Decimal, InvalidOperation

import numpy as np

from .errors import (
    DomainError,
    IllConditionedBandwidthsError,
    InvalidArgumentError,
    NoFeasibleWeightsError,
    NumericalFailureError,
    NumericalOverflowError,
    RichKDEError,
    SingularSystemError,
)
from .error_analysis import convergence_sweep, default_grid, h_pair_sweep
from .extrapolation import (
    BandwidthSet,
    ExtrapolatedEstimator,
    clamp_for_display,
    constraint_residual,
    extrapolated_evaluate_grid,
    lagrange_weights,
)
from .kernel_core import EvaluationGrid, Sample
from .reference import GOLDEN_GAMMA, GaussianMixture, StandardNormal
from .selection import DEFAULT_SPREAD_RATIO, optimal_bandwidth, optimal_order, spread_bandwidths

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_MAX_GRID_POINTS = 10_000_000
REPORT_HEADER = "# richkde benchmark report v1"


class InputFormatError(RichKDEError):
    """Malformed user input (CSV rows, grid or list specs)."""


def fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# parsers for the flag mini-languages
# ---------------------------------------------------------------------------

def _decimal(text: str, what: str) -> Decimal:
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise InputFormatError(f"bad number {text!r} in {what}") from None
    if not value.is_finite():
        raise InputFormatError(f"non-finite number {text!r} in {what}")
    return value


def parse_axis(spec: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a single number; step 0 gives just ``start``."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(_decimal(parts[0], "grid"))]
    if len(parts) != 3:
        raise InputFormatError(f"grid axis {spec!r} is not start:step:stop")
    start, step, stop = (_decimal(p, "grid") for p in parts)
    if step == 0:
        return [float(start)]
    if step < 0 or stop < start:
        raise InputFormatError(f"grid axis {spec!r} needs step > 0 and stop >= start")
    count = int((stop - start) / step) + 1
    if count > _MAX_GRID_POINTS:
        raise InputFormatError(f"grid axis {spec!r} has too many points")
    # exact decimal arithmetic keeps -3:0.1:3 free of accumulated rounding
    return [float(start + k * step) for k in range(count)]


def parse_grid(spec: str, d: int | None = None) -> EvaluationGrid:
    """Comma-joined axis specs, one per dimension; the Cartesian product, first axis slowest."""
    axes = [parse_axis(part) for part in spec.split(",")]
    if d is not None and len(axes) != d:
        if len(axes) == 1:
            axes = axes * d
        else:
            raise InputFormatError(f"grid has {len(axes)} axes but the data have d={d}")
    points = list(itertools.product(*axes))
    if len(points) > _MAX_GRID_POINTS:
        raise InputFormatError("grid has too many points")
    return EvaluationGrid(np.array(points, dtype=np.float64))


def parse_float_list(spec: str, what: str) -> list[float]:
    values = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            raise InputFormatError(f"empty entry in {what} {spec!r}")
        values.append(float(_decimal(part, what)))
    return values


def parse_int_list(spec: str, what: str) -> list[int]:
    try:
        return [int(p) for p in spec.split(",")]
    except ValueError:
        raise InputFormatError(f"bad integer list {spec!r} for {what}") from None


def parse_linspace(spec: str) -> list[float]:
    """``lo,hi,count``: count evenly spaced values from lo to hi inclusive."""
    parts = spec.split(",")
    if len(parts) != 3:
        raise InputFormatError(f"range {spec!r} is not lo,hi,count")
    lo, hi = float(_decimal(parts[0], "range")), float(_decimal(parts[1], "range"))
    try:
        count = int(parts[2])
    except ValueError:
        raise InputFormatError(f"bad count in range {spec!r}") from None
    if count < 1:
        raise InputFormatError(f"range {spec!r} needs count >= 1")
    return np.linspace(lo, hi, count).tolist()


def parse_distribution(spec: str, d: int):
    """``standard-normal`` or ``mixture:w/m1,..,md/s;w/m/s;...``."""
    spec = spec.strip()
    if spec in ("standard-normal", "normal"):
        return StandardNormal(d)
    if spec.startswith("mixture:"):
        comps = []
        for chunk in spec[len("mixture:"):].split(";"):
            fields = chunk.split("/")
            if len(fields) != 3:
                raise InputFormatError(f"mixture component {chunk!r} is not weight/mean/stdev")
            mean = parse_float_list(fields[1], "mixture mean")
            if len(mean) == 1 and d > 1:
                mean = mean * d
            comps.append((float(_decimal(fields[0], "mixture")), mean, float(_decimal(fields[2], "mixture"))))
        dist = GaussianMixture.from_components(comps)
        if dist.d != d:
            raise InputFormatError(f"mixture means have dimension {dist.d}, expected d={d}")
        return dist
    raise InputFormatError(f"unknown distribution {spec!r}")


def read_sample(path: str, header: bool = False) -> Sample:
    """Read one observation per line, d comma-separated decimals."""
    with open(path, newline="") as fh:
        text = fh.read()
    rows, d = [], None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if header and lineno == 1:
            continue
        if not line.strip():
            continue
        try:
            row = [float(x) for x in line.split(",")]
        except ValueError:
            raise InputFormatError(f"{path}: line {lineno}: not a list of numbers: {line!r}") from None
        if not all(math.isfinite(v) for v in row):
            raise InputFormatError(f"{path}: line {lineno}: non-finite value")
        if d is None:
            d = len(row)
        elif len(row) != d:
            raise InputFormatError(f"{path}: line {lineno}: expected {d} values, got {len(row)}")
        rows.append(row)
    if not rows:
        raise InputFormatError(f"{path}: no observations")
    return Sample(np.array(rows, dtype=np.float64))


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# report format
# ---------------------------------------------------------------------------

def format_report(config: dict, sweep) -> str:
    lines = [REPORT_HEADER]
    for key, value in config.items():
        lines.append(f"config.{key} = {value}")
    lines.append("table.columns = n,h_star,mse,stderr")
    for i, row in enumerate(sweep.table):
        lines.append(f"table.{i} = {row.n},{fmt(row.h_star)},{fmt(row.mse)},{fmt(row.stderr)}")
    lines.append(f"slope = {fmt(sweep.slope)}")
    lines.append(f"intercept = {fmt(sweep.intercept)}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Inverse of :func:`format_report`: {'config': {...}, 'table': [...], 'slope', 'intercept'}."""
    out = {"config": {}, "table": []}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, value = line.partition(" = ")
        if key.startswith("config."):
            out["config"][key[len("config."):]] = value
        elif key == "table.columns":
            columns = value.split(",")
        elif key.startswith("table."):
            n, h, mse, se = value.split(",")
            out["table"].append(dict(zip(columns, (int(n), float(h), float(mse), float(se)))))
        else:
            out[key] = float(value)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _bandwidths_for(args, n: int, d: int) -> BandwidthSet:
    if args.bandwidths is not None:
        return BandwidthSet(tuple(parse_float_list(args.bandwidths, "--bandwidths")))
    if getattr(args, "h", None) is not None:
        return BandwidthSet((args.h,))
    r = args.r if args.r is not None else optimal_order(n, d).r
    return spread_bandwidths(optimal_bandwidth(n, d, r), r, args.ratio)


def cmd_sample(args) -> int:
    dist = parse_distribution(args.dist, args.d)
    s = dist.sample(args.n, args.seed)
    _write_text(args.output, _csv_text([[fmt(v) for v in row] for row in s.data]))
    return EXIT_OK


def cmd_eval(args) -> int:
    sample = read_sample(args.input, header=args.header)
    grid = parse_grid(args.grid, sample.d)
    bw = _bandwidths_for(args, sample.n, sample.d)
    est = ExtrapolatedEstimator(sample, bw, lagrange_weights(bw))
    values = extrapolated_evaluate_grid(est, grid)
    if args.clamp:
        values = clamp_for_display(values, _cell_volume(args.grid, sample.d))
    header = [f"x_{k + 1}" for k in range(sample.d)] + ["density"]
    rows = [header] + [[fmt(v) for v in pt] + [fmt(val)] for pt, val in zip(grid.points, values)]
    _write_text(args.output, _csv_text(rows))
    return EXIT_OK


def _cell_volume(spec: str, d: int) -> float | None:
    axes = spec.split(",")
    if len(axes) == 1:
        axes = axes * d
    volume = 1.0
    for axis in axes:
        parts = axis.split(":")
        if len(parts) != 3 or float(parts[1]) == 0:
            return None
        volume *= float(parts[1])
    return volume


def cmd_weights(args) -> int:
    if args.bandwidths is None and (args.n is None or args.d is None):
        raise InputFormatError("weights needs --bandwidths or both --n and --d")
    if args.bandwidths is not None:
        bw = BandwidthSet(tuple(parse_float_list(args.bandwidths, "--bandwidths")))
    else:
        bw = _bandwidths_for(args, args.n, args.d)
    c = lagrange_weights(bw)
    res = constraint_residual(bw, c)
    rows = [["i", "h", "c", "constraint_residual"]]
    for i, (h, ci, ri) in enumerate(zip(bw.values, c, res), start=1):
        rows.append([str(i), fmt(h), fmt(ci), fmt(ri)])
    rows.append(["max_abs_weight", fmt(np.max(np.abs(c)))])
    _write_text("-", _csv_text(rows))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    dist = parse_distribution(args.dist, args.d)
    n_list = parse_int_list(args.n_list, "--n-list")
    grid = parse_grid(args.grid, args.d) if args.grid else default_grid(args.d)
    sweep = convergence_sweep(dist, args.d, args.r, n_list, args.trials, grid, args.seed,
                              spread_ratio=args.ratio)
    config = {
        "dist": dist.describe(),
        "d": args.d,
        "r": args.r,
        "n_list": ",".join(str(n) for n in n_list),
        "trials": args.trials,
        "seed": args.seed,
        "spread_ratio": fmt(args.ratio),
        "grid": args.grid or "default",
        "grid_points": grid.m,
        "trial_seed_rule": f"mix64(seed ^ (0x{GOLDEN_GAMMA:X} * t mod 2^64))",
        "prng": "splitmix64 + box-muller",
    }
    _write_text(args.output, format_report(config, sweep))
    return EXIT_OK


def cmd_sweep(args) -> int:
    dist = parse_distribution(args.dist, args.d)
    if args.h_range:
        h1 = h2 = parse_linspace(args.h_range)
    elif args.h1_list and args.h2_list:
        h1 = parse_float_list(args.h1_list, "--h1-list")
        h2 = parse_float_list(args.h2_list, "--h2-list")
    else:
        raise InputFormatError("sweep needs --h-range or both --h1-list and --h2-list")
    grid = parse_grid(args.grid, args.d) if args.grid else default_grid(args.d)
    result = h_pair_sweep(dist, args.d, args.n, h1, h2, args.trials, grid, args.seed, mode=args.mode)
    rows = [["h1", "h2", "mse"]]
    for i, a in enumerate(result.h1):
        for j, b in enumerate(result.h2):
            m = result.mse[i, j]
            rows.append([fmt(a), fmt(b), "" if np.isnan(m) else fmt(m)])
    # single-bandwidth (r = 1) reference rows carry an empty h2
    for h, m in sorted(result.single_mse.items()):
        rows.append([fmt(h), "", fmt(m)])
    _write_text(args.output, _csv_text(rows))
    if result.missing:
        print(f"{len(result.missing)} of {result.mse.size} cells missing", file=sys.stderr)
    return EXIT_OK


def read_sweep(path: str):
    """Parse a sweep CSV into (cells {(h1, h2): mse or None}, single {h: mse})."""
    cells, single = {}, {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for h1, h2, mse in reader:
            if h2 == "":
                single[float(h1)] = float(mse)
            else:
                cells[(float(h1), float(h2))] = float(mse) if mse else None
    return cells, single


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="richkde",
        description="Richardson-extrapolated Gaussian KDE: evaluation, weights and Monte Carlo benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dist(p):
        p.add_argument("--dist", default="standard-normal",
                       help="standard-normal or mixture:w/mean/stdev;... (mean comma-separated for d>1)")
        p.add_argument("--d", type=_positive_int, default=1)

    p = sub.add_parser("sample", help="draw a seeded sample from a reference distribution")
    add_dist(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="evaluate the extrapolated KDE of a CSV sample on a grid")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true", help="skip the first line of the input")
    p.add_argument("--output", default="-")
    p.add_argument("--grid", required=True, help="start:step:stop per axis, comma-joined")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--h", type=float, help="single bandwidth (r = 1)")
    group.add_argument("--bandwidths", help="explicit bandwidths h1,h2,...")
    group.add_argument("--r", type=_positive_int, help="order; bandwidths spread around h*(n, d, r)")
    p.add_argument("--ratio", type=float, default=DEFAULT_SPREAD_RATIO)
    p.add_argument("--clamp", action="store_true", help="clamp negative values for display")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("weights", help="print Richardson weights and constraint residuals")
    p.add_argument("--bandwidths")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--d", type=_positive_int)
    p.add_argument("--r", type=_positive_int)
    p.add_argument("--ratio", type=float, default=DEFAULT_SPREAD_RATIO)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("benchmark", help="MSE convergence sweep over n with slope fit")
    add_dist(p)
    p.add_argument("--r", type=_positive_int, default=1)
    p.add_argument("--n-list", default="250,500,1000,2000,4000,8000")
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--grid", default=None)
    p.add_argument("--ratio", type=float, default=DEFAULT_SPREAD_RATIO)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sweep", help="MSE surface over bandwidth pairs (CSV for heat maps)")
    add_dist(p)
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--h-range", help="lo,hi,count used for both axes")
    p.add_argument("--h1-list")
    p.add_argument("--h2-list")
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--grid", default=None)
    p.add_argument("--mode", choices=("richardson", "constrained"), default="richardson")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_sweep)
    return parser


_NUMERIC_ERRORS = (
    IllConditionedBandwidthsError,
    SingularSystemError,
    NoFeasibleWeightsError,
    NumericalFailureError,
    NumericalOverflowError,
    DomainError,
    InvalidArgumentError,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputFormatError as exc:
        print(f"richkde: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IllConditionedBandwidthsError as exc:
        print(f"richkde: ill-conditioned bandwidths: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _NUMERIC_ERRORS as exc:
        print(f"richkde: numerical configuration error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"richkde: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
