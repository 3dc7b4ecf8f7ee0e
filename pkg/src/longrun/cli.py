"""Command-line front end: ``longrun test | dist | simulate``.

Exit status
-----------
0  success (for ``test``: H0 not rejected)
3  ``test`` rejected H0
1  usage error
2  data error (unreadable or malformed input, sample too small, estimation failure)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .combinatorics import CONVENTIONS, critical_value, null_distribution
from .errors import EstimationError, PreconditionError, SampleTooSmallError
from .estimation import ESTIMATORS, Dataset, MeanEstimatorSpec
from .lrt import MIN_N, TestReport, run_test
from .simulation import DEFAULT_C, DEFAULT_LEVELS, DEFAULT_N, SimulationModel, reproduce_table
from .simulation import MAX_N as SIM_MAX_N
from .simulation import MIN_N as SIM_MIN_N

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_REJECT = 0, 1, 2, 3
DIST_MAX_N = 10_000
# |simulated - published| above this many percentage points is flagged by --compare-paper
COMPARE_TOLERANCE_PP = 6.0

FORMATS = ("human", "json", "csv")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sig(p) -> str:
    return f"{float(p):.4g}"


def _frac(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def _probability(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"level must lie in (0, 1), got {text}")
    return v


def _bandwidth(text):
    if text == "auto":
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bandwidth must be a positive number or 'auto', got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"bandwidth must be positive, got {text}")
    return v


def _non_negative(text):
    v = float(text)
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"c must be non-negative, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="longrun", description="Exact longest-run test for heteroscedasticity.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def output_options(p, default_format):
        p.add_argument("--format", choices=FORMATS, default=default_format)
        p.add_argument("--output", type=Path, help="write here instead of standard output")

    t = sub.add_parser("test", help="run the test on a CSV file with header x,y")
    output_options(t, "human")
    t.add_argument("--input", required=True, type=Path)
    t.add_argument("--estimator", choices=ESTIMATORS, default="kernel")
    t.add_argument("--bandwidth", type=_bandwidth, default="auto")
    t.add_argument("--loo", action="store_true", help="kernel residuals from leave-one-out fits")
    t.add_argument("--model", type=int, choices=(1, 2, 3), help="mean function for --estimator known")
    t.add_argument("--level", type=_probability, default=0.05)
    t.add_argument("--convention", choices=CONVENTIONS, default="below")

    d = sub.add_parser("dist", help="exact null distribution of the longest run")
    output_options(d, "human")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--level", type=_probability, nargs="+", default=[])
    d.add_argument("--convention", choices=CONVENTIONS, default="below")

    s = sub.add_parser("simulate", help="Monte Carlo size and power")
    output_options(s, "csv")
    s.add_argument("--model", type=int, choices=(1, 2, 3), nargs="+", default=[1, 2, 3])
    s.add_argument("--n", type=int, nargs="+", default=list(DEFAULT_N))
    s.add_argument("--c", type=_non_negative, nargs="+", default=list(DEFAULT_C))
    s.add_argument("--level", type=_probability, nargs="+", default=list(DEFAULT_LEVELS))
    s.add_argument("--reps", type=_positive_int, default=1000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--estimator", choices=ESTIMATORS, default="kernel")
    s.add_argument("--bandwidth", type=_bandwidth, default="auto")
    s.add_argument("--loo", action="store_true")
    s.add_argument("--convention", choices=CONVENTIONS, default="nearest")
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--compare-paper", action="store_true")
    return parser


# -- input -------------------------------------------------------------------


def read_dataset(path: Path, warn=None) -> Dataset:
    """Read a two-column CSV with header ``x,y``; rows are sorted by x if needed."""
    warn = warn or (lambda msg: None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None

    rows = csv.reader(io.StringIO(text))
    xs, ys = [], []
    header_seen = False
    for lineno, row in enumerate(rows, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            if [cell.strip() for cell in row] != ["x", "y"]:
                raise DataError(f"line {lineno}: expected header 'x,y', got {','.join(row)!r}")
            header_seen = True
            continue
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric value in {','.join(row)!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DataError(f"line {lineno}: non-finite value in {','.join(row)!r}")
        xs.append(x)
        ys.append(y)
    if not header_seen:
        raise DataError("empty input: expected header 'x,y'")
    if len(xs) < MIN_N:
        raise DataError(f"sample too small (minimum {MIN_N}), got {len(xs)} rows")

    x, y = np.array(xs), np.array(ys)
    if np.any(np.diff(x) < 0):
        order = np.argsort(x, kind="stable")
        x, y = x[order], y[order]
        warn("warning: rows were not sorted by x and have been reordered")
    if np.any(np.diff(x) == 0):
        warn("note: repeated x values present")
    return Dataset(x, y)


# -- rendering ---------------------------------------------------------------


def _colour(text, code, stream):
    if os.environ.get("NO_COLOR") is not None or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\033[{code}m{text}\033[0m"


def render_report(report: TestReport, fmt: str, stream=None) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if fmt == "csv":
        d = report.to_dict()
        row = {
            "n": d["n"],
            "statistic": d["statistic"],
            "median_squared_residual": d["median_squared_residual"],
            "critical_value": d["critical_value"],
            "target_level": d["target_level"],
            "attained_level": d["attained_level"],
            "attained_level_exact": _frac(report.attained_level),
            "p_value": d["p_value"],
            "p_value_exact": _frac(report.p_value),
            "decision": d["decision"],
            "estimator": report.estimator_used.kind,
            "convention": d["convention"],
        }
        return _csv([row])

    est = report.estimator_used
    est_text = est.kind
    if est.kind == "kernel":
        est_text += f" (bandwidth {_sig(est.bandwidth)}{', leave-one-out' if est.loo else ''})"
    decision = _colour(report.decision, "1;31" if report.reject else "1;32", stream)
    lines = [
        "Longest-run test for heteroscedasticity",
        f"  n                        {report.n}",
        f"  mean estimator           {est_text}",
        f"  median squared residual  {_sig(report.median_squared_residual)}",
        f"  longest run L_n          {report.statistic}",
        f"  critical value           {report.critical_value}  (reject if L_n > {report.critical_value})",
        f"  target level             {report.target_level:g}  ({report.convention} convention)",
        f"  attained level           {_sig(report.attained_level)} = {_frac(report.attained_level)}"
        + ("  [degenerate: no positive level reachable, never rejects]" if report.attained_level == 0 else ""),
        f"  {'p-value P(L_n >= ' + str(report.statistic) + ')':<25}{_sig(report.p_value)} = {_frac(report.p_value)}",
        f"  decision                 {decision}",
        f"  note: {report.note}",
    ]
    return "\n".join(lines) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def distribution_rows(n: int) -> list[dict]:
    dist = null_distribution(n)
    rows = []
    for x in range(n + 1):
        cdf, pmf = dist.cdf(x), dist.pmf(x)
        rows.append(
            {
                "x": x,
                "cdf_numerator": str(cdf.numerator),
                "cdf_denominator": str(cdf.denominator),
                "cdf": float(cdf),
                "pmf": float(pmf),
                "pmf_exact": _frac(pmf),
            }
        )
    return rows


def critical_rows(n: int, levels, convention) -> list[dict]:
    rows = []
    for level in levels:
        rec = critical_value(n, level, convention)
        rows.append(
            {
                "target_level": level,
                "critical_value": rec.critical_value,
                "attained_level": float(rec.attained_level),
                "attained_level_numerator": str(rec.attained_level.numerator),
                "attained_level_denominator": str(rec.attained_level.denominator),
                "convention": convention,
                "degenerate": rec.degenerate,
            }
        )
    return rows


def render_dist(n, levels, convention, fmt) -> str:
    rows = distribution_rows(n)
    crit = critical_rows(n, levels, convention)
    if fmt == "json":
        return json.dumps({"n": n, "k": n // 2, "distribution": rows, "critical_values": crit}, indent=2) + "\n"
    if fmt == "csv":
        out = _csv(rows)
        if crit:
            out += "\n" + _csv(crit)
        return out
    dist = null_distribution(n)
    lines = [f"Exact null distribution of the longest run, n={n}, {n // 2} ones", ""]
    lines.append(f"{'x':>5}  {'P(L<=x)':>10}  {'P(L=x)':>10}  exact P(L<=x)")
    for row in rows:
        x = row["x"]
        lines.append(f"{x:>5}  {_sig(row['cdf']):>10}  {_sig(row['pmf']):>10}  {_frac(dist.cdf(x))}")
        if row["cdf"] == 1.0 and dist.cdf(x) == 1:
            if x < n:
                lines.append(f"{'...':>5}  {'1':>10}  {'0':>10}  1/1   (through x={n})")
            break
    for c in crit:
        att = Fraction(int(c["attained_level_numerator"]), int(c["attained_level_denominator"]))
        flag = "  [degenerate: never rejects]" if c["degenerate"] else ""
        lines.append(
            f"level {c['target_level']:g} ({convention}): reject if L > {c['critical_value']}, "
            f"attained level {_sig(att)} = {_frac(att)}{flag}"
        )
    return "\n".join(lines) + "\n"


def render_simulation(estimates, fmt, compare) -> str:
    rows = []
    for est in estimates:
        row = est.to_row()
        if compare:
            ref = row["paper_reference_value"]
            row["deviation_pp"] = None if ref is None else round(100 * (row["rejection_rate"] - ref), 4)
            row["flag"] = (
                ""
                if row["deviation_pp"] is None or abs(row["deviation_pp"]) <= COMPARE_TOLERANCE_PP
                else "DEVIATES"
            )
        else:
            row.pop("paper_reference_value")
        rows.append(row)
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        return _csv(rows)
    lines = []
    header = f"{'model':>5} {'n':>5} {'c':>5} {'level':>7} {'crit':>4} {'rate':>7} {'se':>7}"
    if compare:
        header += f" {'publ.':>7} {'diff pp':>8}"
    lines.append(header)
    for r in rows:
        line = (
            f"{r['model']:>5} {r['n']:>5} {r['c']:>5g} {100 * r['level_attained']:>6.2f}% "
            f"{r['critical_value']:>4} {r['rejection_rate']:>7.3f} {r['std_err']:>7.4f}"
        )
        if compare:
            ref = r["paper_reference_value"]
            line += f" {'-' if ref is None else f'{ref:.3f}':>7} {'-' if ref is None else r['deviation_pp']:>8}"
            line += f" {r['flag']}" if r["flag"] else ""
        lines.append(line)
    lines.append(
        f"{estimates[0].replicates} replicates per cell, estimator {estimates[0].config.estimator.kind}, "
        f"seed {estimates[0].config.master_seed}"
    )
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------


def _emit(text, args, stdout):
    if args.output is not None:
        try:
            args.output.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot write {args.output}: {exc}") from None
    else:
        stdout.write(text)


def cmd_test(args, stdout, stderr) -> int:
    if args.estimator == "known" and args.model is None:
        raise UsageError("--estimator known needs --model to supply the mean function")
    if args.model is not None and args.estimator != "known":
        raise UsageError("--model is only used with --estimator known")
    if args.estimator != "kernel" and (args.bandwidth != "auto" or args.loo):
        raise UsageError("--bandwidth and --loo apply to --estimator kernel only")

    data = read_dataset(args.input, warn=lambda msg: print(msg, file=stderr))
    if args.estimator == "known":
        spec = MeanEstimatorSpec("known", known_mean=tuple(SimulationModel(args.model).mean(data.x)))
    else:
        spec = MeanEstimatorSpec(args.estimator, bandwidth=args.bandwidth, loo=args.loo)
    try:
        report = run_test(data, spec, args.level, args.convention)
    except (EstimationError, SampleTooSmallError) as exc:
        raise DataError(str(exc)) from None
    _emit(render_report(report, args.format, stdout), args, stdout)
    return EXIT_REJECT if report.reject else EXIT_OK


def cmd_dist(args, stdout, stderr) -> int:
    if not 2 <= args.n <= DIST_MAX_N:
        raise UsageError(f"--n must lie in [2, {DIST_MAX_N}], got {args.n}")
    _emit(render_dist(args.n, args.level, args.convention, args.format), args, stdout)
    return EXIT_OK


def cmd_simulate(args, stdout, stderr) -> int:
    for n in args.n:
        if not SIM_MIN_N <= n <= SIM_MAX_N:
            raise UsageError(f"--n must lie in [{SIM_MIN_N}, {SIM_MAX_N}], got {n}")
    if args.estimator == "kernel":
        estimator = MeanEstimatorSpec("kernel", bandwidth=args.bandwidth, loo=args.loo)
    elif args.bandwidth != "auto" or args.loo:
        raise UsageError("--bandwidth and --loo apply to --estimator kernel only")
    else:
        estimator = args.estimator
    estimates = reproduce_table(
        n_values=args.n,
        c_values=args.c,
        levels=args.level,
        replicates=args.reps,
        seed=args.seed,
        estimator=estimator,
        models=args.model,
        convention=args.convention,
        workers=args.workers,
    )
    _emit(render_simulation(estimates, args.format, args.compare_paper), args, stdout)
    return EXIT_OK


COMMANDS = {"test": cmd_test, "dist": cmd_dist, "simulate": cmd_simulate}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, stdout, stderr)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=stderr)
        return EXIT_DATA
    except PreconditionError as exc:
        print(f"data error: {exc}", file=stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
