"""Command-line front end: ``shiftlab <command> [options]``.

Exit codes: 0 success, 2 bad arguments, 3 a verification failed.
Reports are JSON, series are CSV; floats carry 12 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .combinatorics import AlphabetPartition, entropy_grid, lattice_enumerate, type_count
from .construct import (
    AdmissibleSet,
    SpectrumTarget,
    build_dc_pair,
    build_exact_spectrum_pair,
    construct_admissible_set,
    distal_exponent,
    predicted_exact_spectrum,
    verify_admissible,
)
from .density import IndexSet, spectrum_estimate
from .dimension import box_dim_estimate, dc_lower_bound_spec, liminf_dim_lower_bound, theorem_targets
from .distributional import agreement_runs, approach_times, checkpoint_spectrum, classify_pair
from .errors import ShiftlabError
from .symbolic import TruncatedPoint

log = logging.getLogger("shiftlab")

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 2, 3


class UsageError(Exception):
    pass


def fmt(v):
    """Round floats to 12 significant digits, recursively."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v) or math.isnan(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): fmt(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [fmt(x) for x in v]
    return v


def dump_json(obj) -> str:
    return json.dumps(fmt(obj), indent=1, sort_keys=True) + "\n"


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def emit(args, name: str, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


def emit_table(args, stem: str, header, rows) -> None:
    """Tables go out as CSV unless ``--format json`` asks for records."""
    rows = list(rows)
    if args.format == "json":
        emit(args, f"{stem}.json", dump_json([dict(zip(header, r)) for r in rows]))
    else:
        emit(args, f"{stem}.csv", dump_csv(header, rows))


def point_text(x: TruncatedPoint) -> str:
    sep = "" if x.K <= 10 else ","
    return f"K={x.K}\n" + sep.join(str(int(s)) for s in x.symbols) + "\n"


def read_point(path: str) -> TruncatedPoint:
    lines = Path(path).read_text().split()
    if not lines or not lines[0].startswith("K="):
        raise UsageError(f"{path}: expected a 'K=' header line")
    K = int(lines[0][2:])
    body = "".join(lines[1:])
    syms = [int(s) for s in body.split(",")] if "," in body else [int(c) for c in body]
    return TruncatedPoint(np.array(syms, dtype=np.int64), K)


def threads() -> int:
    raw = os.environ.get("SHIFTLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SHIFTLAB_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise UsageError("SHIFTLAB_THREADS must be >= 1")
    return n


def target_of(args) -> SpectrumTarget:
    if args.p is None or args.q is None:
        raise UsageError("--p and --q are required")
    if not 0 <= args.p <= args.q <= 1:
        raise UsageError(f"need 0 <= p <= q <= 1, got p={args.p}, q={args.q}")
    return SpectrumTarget(args.p, args.q)


def _build(args):
    T = target_of(args)
    A = construct_admissible_set(T, delta=args.delta, horizon=args.horizon, rate=args.rate)
    return T, A


def cmd_construct(args) -> int:
    T, A = _build(args)
    report = verify_admissible(A, T, tol=args.tol, warmup=args.warmup, i_min=args.i_min)
    emit(args, "set.json", A.to_json() + "\n")
    emit(args, "verify.json", dump_json({"target": T.as_dict(), "rate": A.rate, **report.as_dict()}))
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_pair(args) -> int:
    T, A = _build(args)
    K = args.K
    if args.k_max > args.horizon // 10:
        raise UsageError(f"--k-max {args.k_max} needs a horizon of at least {10 * args.k_max}")
    if args.mode == "exact-D":
        x, y = build_dc_pair(T, K, A, tol=args.tol, warmup=args.warmup)
        k_d = distal_exponent(TruncatedPoint.constant(0, K, 4), TruncatedPoint.constant(K - 1, K, 4))
    else:
        x, y = build_exact_spectrum_pair(T, K, A, tol=args.tol, warmup=args.warmup)
    runs = agreement_runs(x, y)
    rows = []
    for k in range(1, args.k_max + 1):
        s = checkpoint_spectrum(approach_times(x, y, k, runs).indices, A.set, args.warmup)
        if args.mode == "exact-E":
            lo, hi = predicted_exact_spectrum(T, K, k)
        elif k >= k_d:
            lo, hi = T.p, T.q
        else:
            lo = hi = ""
        rows.append((k, lo, hi, s.lo, s.hi))
    emit(args, "x.txt", point_text(x))
    emit(args, "y.txt", point_text(y))
    emit_table(args, "profile", ("k", "predicted_lo", "predicted_hi", "empirical_lo", "empirical_hi"), rows)
    return EXIT_OK


def cmd_classify(args) -> int:
    if not args.x or not args.y:
        raise UsageError("classify needs --x and --y point files")
    x, y = read_point(args.x), read_point(args.y)
    r = classify_pair(x, y, k_max=args.k_max, warmup=args.warmup)
    emit(args, "classify.json", dump_json({"labels": list(r.labels), "evidence": r.evidence}))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if args.set:
        text = Path(args.set).read_text()
        S = AdmissibleSet.from_json(text).set if text.lstrip().startswith("{") else IndexSet.from_text(text)
    else:
        _, A = _build(args)
        S = A.set
    s = spectrum_estimate(S, args.warmup)
    emit(args, "spectrum.json", dump_json({"lo": s.lo, "hi": s.hi, "flags": list(s.flags), "horizon": S.horizon}))
    return EXIT_OK


def cmd_count(args) -> int:
    P = AlphabetPartition.parse(args.partition) if args.partition else AlphabetPartition.singletons(args.K)
    if P.K != args.K:
        raise UsageError(f"partition covers {P.K} symbols, --K is {args.K}")
    rows = []
    for tv in lattice_enumerate(P.m, args.n):
        c = type_count(P, tv, args.n)
        rows.append((args.n, *[str(p) for p in tv.probs], "" if c.exact is None else c.exact, c.log_value))
    header = ("n", *[f"p{i}" for i in range(P.m)], "exact", "log")
    emit_table(args, "counts", header, rows)
    return EXIT_OK


def cmd_entropy(args) -> int:
    P = AlphabetPartition.parse(args.partition) if args.partition else AlphabetPartition.singletons(args.K)
    if P.K != args.K:
        raise UsageError(f"partition covers {P.K} symbols, --K is {args.K}")
    p0, g = entropy_grid(P, args.grid)
    emit_table(args, "entropy", ("p0", "g"), zip(p0.tolist(), g.tolist()))
    return EXIT_OK


def cmd_dim(args) -> int:
    T, A = _build(args)
    spec, analytic = dc_lower_bound_spec(T, args.K, args.n, A, warmup=args.warmup, tol=args.tol)
    depth = spec.depth - 1
    lb = liminf_dim_lower_bound(spec, depth)
    box = box_dim_estimate(spec, depth)
    emit(
        args,
        "dim.json",
        dump_json(
            {
                "n": args.n,
                "analytic_bound": analytic,
                "liminf_bound": lb.value,
                "box_estimate": box.value,
                "box_residual": box.residual,
                "pair_space": {"analytic": 2 * analytic, "liminf": 2 * lb.value, "box": 2 * box.value},
                "targets": theorem_targets(T),
            }
        ),
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    results = acceptance.run_suite(args.suite, seed=args.seed, threads=threads())
    for r in results:
        print(r.line(), file=sys.stderr)
    payload = [
        {"criterion": r.number, "title": r.title, "passed": r.passed, "seconds": round(r.seconds, 1)} for r in results
    ]
    emit(args, "verify.json", dump_json(payload))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "construct": cmd_construct,
    "pair": cmd_pair,
    "classify": cmd_classify,
    "spectrum": cmd_spectrum,
    "count": cmd_count,
    "entropy": cmd_entropy,
    "dim": cmd_dim,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--K", type=int, default=2)
    common.add_argument("--horizon", type=int, default=10**6)
    common.add_argument("--p", type=float)
    common.add_argument("--q", type=float)
    common.add_argument("--delta", type=float, default=0.1)
    common.add_argument("--rate", default="auto", choices=("auto", "sqrt", "position", "geometric"))
    common.add_argument("--warmup", type=int)
    common.add_argument("--i-min", type=int)
    common.add_argument("--k-max", type=int, default=4)
    common.add_argument("--tol", type=float, default=0.05)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="csv", help="format of tabular outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="shiftlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("construct", parents=[common], help="build and verify an index set")
    p = sub.add_parser("pair", parents=[common], help="build an interleaved pair and its spectrum profile")
    p.add_argument("--mode", choices=("exact-D", "exact-E"), default="exact-E")
    p = sub.add_parser("classify", parents=[common], help="classify a pair read from point files")
    p.add_argument("--x")
    p.add_argument("--y")
    p = sub.add_parser("spectrum", parents=[common], help="density spectrum of a set file or a fresh construction")
    p.add_argument("--set")
    p = sub.add_parser("count", parents=[common], help="type-count table")
    p.add_argument("--partition")
    p.add_argument("--n", type=int, default=4)
    p = sub.add_parser("entropy", parents=[common], help="entropy grid for a two-class partition")
    p.add_argument("--partition")
    p.add_argument("--grid", type=int, default=100)
    p = sub.add_parser("dim", parents=[common], help="dimension bounds of the product set steered by a constructed set")
    p.add_argument("--n", type=int, default=4)
    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--suite", choices=("quick", "full"), default="full")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.K < 2:
        parser.print_usage(sys.stderr)
        print("shiftlab: error: --K must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    if args.horizon < 1000 and args.command in ("construct", "pair", "spectrum", "dim"):
        print("shiftlab: error: --horizon must be >= 1000", file=sys.stderr)
        return EXIT_USAGE
    if args.tol <= 0 or args.delta <= 0:
        print("shiftlab: error: --tol and --delta must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"shiftlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ShiftlabError as exc:
        print(f"shiftlab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
