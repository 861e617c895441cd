"""Command-line interface.

Subcommands:

* ``synth``     convergence experiment for f(X, Y) embedding estimators
* ``pairs``     score a directory of cause-effect pairs
* ``eval``      evaluate an expression over expansion files
* ``reduce``    compress an expansion file to fewer points
* ``mmd``       squared RKHS distance between two expansion files
* ``plot-data`` summarize synth records into a mean/sd table

Exit codes: 0 on success, 2 for input problems, 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from . import embedding
from .anm import AnmConfig
from .dsl import EvalPolicy, evaluate_text
from .embedding import load as load_expansion, mmd_sq, save as save_expansion
from .errors import InputError, KmpropError
from .experiments import (
    RunRecord,
    SynthConfig,
    curve_to_csv,
    records_to_csv,
    records_to_json,
    reports_to_csv,
    run_pairs,
    run_synth,
    summarize_records,
)
from .kernels import KernelSpec
from .reduce import reduce_random


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InputError(f"expected a comma-separated integer list, got {text!r}") from None


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _resolve_kernel(args) -> KernelSpec | None:
    """Kernel from the shared flags; None means 'choose by median heuristic'."""
    if args.kernel == "linear":
        return KernelSpec.linear()
    if args.kernel == "poly":
        return KernelSpec.polynomial(args.kernel_degree, args.kernel_offset)
    if args.sigma == "median":
        return None
    try:
        sigma = float(args.sigma)
    except ValueError:
        raise InputError(f"--sigma must be a number or 'median', got {args.sigma!r}") from None
    return KernelSpec.gaussian(sigma)


def _write_text(out, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _add_common(sub: argparse.ArgumentParser, with_format: bool = True) -> None:
    sub.add_argument("--seed", type=int, default=0, help="master random seed")
    sub.add_argument("--kernel", choices=("gaussian", "linear", "poly"),
                     default="gaussian", help="kernel family")
    sub.add_argument("--sigma", default="median",
                     help="gaussian bandwidth, a number or 'median' (default)")
    sub.add_argument("--kernel-degree", type=int, default=2,
                     help="degree for --kernel poly")
    sub.add_argument("--kernel-offset", type=float, default=1.0,
                     help="offset for --kernel poly")
    sub.add_argument("--out", default=None, help="output path (default: stdout)")
    if with_format:
        sub.add_argument("--format", choices=("csv", "json"), default="csv",
                         help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmprop",
        description="Arithmetic on random variables via weighted kernel-mean expansions.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="estimator convergence on synthetic Gaussians")
    _add_common(p)
    p.add_argument("--op", default="mul", choices=("add", "sub", "mul", "div", "pow"))
    p.add_argument("--m-values", type=_int_list, default=(10, 20, 30, 40, 50))
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--proxy-size", type=int, default=100)
    p.add_argument("--proxy-kind", default="grid", choices=("grid", "paired"))
    p.add_argument("--reduced-frac", type=float, default=0.4)
    p.add_argument("--estimators", type=_str_list, default=("mu1", "mu2", "mu3"))
    p.add_argument("--x-mean", type=float, default=3.0)
    p.add_argument("--x-sd", type=float, default=math.sqrt(0.5))
    p.add_argument("--y-mean", type=float, default=4.0)
    p.add_argument("--y-sd", type=float, default=math.sqrt(0.5))
    p.set_defaults(handler=_cmd_synth)

    p = subs.add_parser("pairs", help="score cause-effect pairs in a directory")
    _add_common(p)
    p.add_argument("--data", required=True, help="directory of pair files")
    p.add_argument("--meta", default=None,
                   help="metadata CSV (default: <data>/metadata.csv)")
    p.add_argument("--degree", type=int, default=4, help="regression degree")
    p.add_argument("--mode", choices=("exact", "rff"), default="rff")
    p.add_argument("--rff-features", type=int, default=100)
    p.add_argument("--abstain-margin", type=float, default=0.0)
    p.add_argument("--split-fit", action="store_true")
    p.add_argument("--ridge", type=float, default=0.0)
    p.set_defaults(handler=_cmd_pairs)

    p = subs.add_parser("eval", help="evaluate an expression over expansion files")
    _add_common(p)
    p.add_argument("--expr", required=True)
    p.add_argument("--var", action="append", default=[], metavar="NAME=PATH",
                   help="bind a variable to an expansion file (repeatable)")
    p.add_argument("--budget", type=int, default=None,
                   help="compress intermediates above this size")
    p.add_argument("--ridge", type=float, default=None)
    p.set_defaults(handler=_cmd_eval)

    p = subs.add_parser("reduce", help="compress an expansion to fewer points")
    _add_common(p)
    p.add_argument("--input", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--target", type=int, default=None)
    group.add_argument("--fraction", type=float, default=None)
    p.add_argument("--ridge", type=float, default=None)
    p.set_defaults(handler=_cmd_reduce)

    p = subs.add_parser("mmd", help="squared RKHS distance between two expansions")
    _add_common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(handler=_cmd_mmd)

    p = subs.add_parser("plot-data", help="summarize synth records")
    _add_common(p)
    p.add_argument("--input", required=True, help="records CSV from synth")
    p.set_defaults(handler=_cmd_plot_data)

    return parser


def _cmd_synth(args) -> int:
    config = SynthConfig(
        operation=args.op, m_values=args.m_values, repetitions=args.reps,
        proxy_size=args.proxy_size, proxy_kind=args.proxy_kind,
        reduced_fraction=args.reduced_frac,
        estimators=args.estimators, x_mean=args.x_mean, x_sd=args.x_sd,
        y_mean=args.y_mean, y_sd=args.y_sd, seed=args.seed,
        kernel=_resolve_kernel(args),
    )
    records = run_synth(config)
    if args.format == "json":
        _write_text(args.out, json.dumps(records_to_json(records), indent=2) + "\n")
    else:
        _write_text(args.out, records_to_csv(records))
    return 0


def _cmd_pairs(args) -> int:
    import os

    meta = args.meta if args.meta is not None else os.path.join(args.data, "metadata.csv")
    config = AnmConfig(
        degree=args.degree, mode=args.mode, n_rff=args.rff_features,
        abstain_margin=args.abstain_margin, split_fit=args.split_fit,
        ridge=args.ridge, kernel=_resolve_kernel(args), seed=args.seed,
    )
    reports, curve = run_pairs(args.data, meta, config)
    if args.out is None:
        sys.stdout.write(reports_to_csv(reports))
        sys.stdout.write(curve_to_csv(curve))
    else:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "reports.csv"), "w") as fh:
            fh.write(reports_to_csv(reports))
        with open(os.path.join(args.out, "curve.csv"), "w") as fh:
            fh.write(curve_to_csv(curve))
    decided = [r for r in reports if r.decision != "abstain"]
    correct = sum(1 for r in decided if r.decision == r.ground_truth)
    print(f"pairs: {len(reports)} scored, {len(decided)} decided, "
          f"{correct} correct", file=sys.stderr)
    return 0


def _parse_bindings(pairs: list[str]) -> dict:
    env = {}
    for binding in pairs:
        name, sep, path = binding.partition("=")
        if not sep or not name or not path:
            raise InputError(f"--var needs NAME=PATH, got {binding!r}")
        env[name] = load_expansion(path)
    return env


def _cmd_eval(args) -> int:
    env = _parse_bindings(args.var)
    policy = EvalPolicy(budget=args.budget, kernel=_resolve_kernel(args),
                        ridge=args.ridge, seed=args.seed)
    result = evaluate_text(args.expr, env, policy)
    _write_expansion(result, args.out, args.format)
    return 0


def _write_expansion(mu, out, fmt: str) -> None:
    if out is None:
        text = embedding.dumps_json(mu) + "\n" if fmt == "json" else embedding.dumps_csv(mu)
        sys.stdout.write(text)
    else:
        save_expansion(mu, out, fmt)


def _cmd_reduce(args) -> int:
    mu = load_expansion(args.input)
    if args.target is not None:
        target = args.target
    else:
        if not (0.0 < args.fraction <= 1.0):
            raise InputError(f"--fraction must be in (0, 1], got {args.fraction}")
        target = max(1, int(round(args.fraction * mu.size)))
    result = reduce_random(mu, target, ridge=args.ridge, seed=args.seed)
    _write_expansion(result.reduced, args.out, args.format)
    print(f"achieved_error_sq={result.achieved_error_sq!r} solver={result.solver}",
          file=sys.stderr)
    return 0


def _cmd_mmd(args) -> int:
    a = load_expansion(args.a)
    b = load_expansion(args.b)
    v = mmd_sq(a, b)
    if args.format == "json":
        _write_text(args.out, json.dumps({"mmd_sq": v}) + "\n")
    else:
        _write_text(args.out, repr(v) + "\n")
    return 0


def _cmd_plot_data(args) -> int:
    records = _read_records_csv(args.input)
    _write_text(args.out, summarize_records(records))
    return 0


def _read_records_csv(path) -> list[RunRecord]:
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise InputError(f"cannot read records file {path}: {e}") from e
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["estimator", "m", "repetition", "loss"]:
            raise InputError(f"{path}: not a synth records CSV")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out.append(RunRecord(estimator=row[0], m=int(row[1]),
                                     repetition=int(row[2]), loss=float(row[3]),
                                     wall_time=0.0))
            except (IndexError, ValueError):
                raise InputError(f"{path}:{lineno}: malformed record row") from None
    if not out:
        raise InputError(f"{path}: no records")
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except KmpropError as e:
        print(f"kmprop: error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"kmprop: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
