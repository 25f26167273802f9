"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime failure; ``decide
--exit-code`` additionally uses 3 for a NO answer.  Counts are printed as
exact decimal integers, never in scientific notation.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys
from typing import TextIO

from . import __version__
from .cnf_encode import DimacsError, encode_direct, write_dimacs
from .exact_count import (CapExceeded, DEFAULT_BRUTE_CAP, count_backtrack,
                          count_brute, decide_from_count)
from .experiments import (PointSpec, SweepConfig, accuracy_table, crossing_point,
                          emit_accuracy_csv, emit_comparison_csv, emit_csv,
                          emit_svg_plot, estimator_comparison, sweep_manifest,
                          sweep_tightness, write_manifest)
from .rb_model import (InstanceFormatError, RbParams, derive_sizes, generate,
                       read_instance, theorem_applicability, write_instance)
from .theory import (ae_count, critical_density, critical_tightness)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit 1
        raise UsageError(f"{self.prog}: error: {message}")


@contextlib.contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fp:
            yield fp


@contextlib.contextmanager
def _open_in(path: str):
    if path == "-":
        yield sys.stdin
    else:
        with open(path, "r", encoding="utf-8") as fp:
            yield fp


def _add_params(sub: argparse.ArgumentParser, with_p: bool = True) -> None:
    sub.add_argument("-k", type=int, required=True, help="constraint arity")
    sub.add_argument("-n", type=int, required=True, help="variable count")
    sub.add_argument("-a", "--alpha", type=float, required=True,
                     help="domain growth exponent (d = n^alpha)")
    sub.add_argument("-r", type=float, required=True,
                     help="constraint density (m = r*n*ln n)")
    if with_p:
        sub.add_argument("-p", type=float, required=True,
                         help="constraint tightness in (0, 1)")


def _params(args, p: float | None = None) -> RbParams:
    return RbParams(args.k, args.n, args.alpha, args.r,
                    args.p if p is None else p,
                    getattr(args, "seed", 0))


def _count_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--method", choices=("backtrack", "brute"),
                     default="backtrack", help="counting algorithm")
    sub.add_argument("--cap", type=int, default=DEFAULT_BRUTE_CAP,
                     help="assignment-space cap for --method brute")


def _run_count(instance, args):
    if args.method == "brute":
        return count_brute(instance, cap=args.cap)
    return count_backtrack(instance)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    instance = generate(_params(args))
    with _open_out(args.output) as fp:
        write_instance(instance, fp)
    return 0


def cmd_count(args) -> int:
    with _open_in(args.instance) as fp:
        instance = read_instance(fp)
    result = _run_count(instance, args)
    print(result.count)
    print(f"nodes {result.nodes_visited}")
    print(f"method {result.method}")
    return 0


def cmd_decide(args) -> int:
    with _open_in(args.instance) as fp:
        instance = read_instance(fp)
    result = _run_count(instance, args)
    decision = decide_from_count(result, instance.d, instance.n, args.divisor)
    print("YES" if decision.answer else "NO")
    print(f"count {result.count}")
    print(f"threshold d^(n/{args.divisor}) with d={instance.d} n={instance.n}")
    if args.exit_code and not decision.answer:
        return 3
    return 0


def cmd_estimate(args) -> int:
    params = _params(args)
    sizes = derive_sizes(params)
    p_eff = sizes.t_nogoods / sizes.d ** params.k
    est = ae_count(params, args.delta, args.divisor, critical_band=args.band)
    report = theorem_applicability(params, args.divisor)
    print(f"d {sizes.d}")
    print(f"m {sizes.m}")
    print(f"t_nogoods {sizes.t_nogoods}")
    print(f"p_eff {p_eff!r}")
    print(f"expected {est.expected!r}")
    print(f"log_expected {est.log_expected!r}")
    print(f"delta {est.delta!r}")
    print(f"interval_low {est.interval_low!r}")
    print(f"interval_high {est.interval_high!r}")
    print(f"log_interval_low {est.log_interval_low!r}")
    print(f"log_interval_high {est.log_interval_high!r}")
    print(f"critical_tightness {critical_tightness(params.alpha, params.r, args.divisor)!r}")
    print(f"critical_density {critical_density(params.alpha, p_eff, args.divisor)!r}")
    print(f"prediction {est.predicted}")
    print(f"alpha_above_inverse_arity {report.alpha_above_inverse_arity}")
    print(f"domain_growth_ok {report.domain_growth_ok}")
    print(f"arity_vs_tightness_ok {report.arity_vs_tightness_ok}")
    print(f"tightness_threshold_ok {report.tightness_threshold_ok}")
    print(f"density_threshold_ok {report.density_threshold_ok}")
    print(f"interval_estimate_ok {report.interval_estimate_ok}")
    return 0


def cmd_encode(args) -> int:
    with _open_in(args.instance) as fp:
        instance = read_instance(fp)
    cnf = encode_direct(instance)
    comments = [f"rbcount {__version__} direct encoding",
                f"source: n={instance.n} d={instance.d} "
                f"constraints={len(instance.constraints)}"]
    if instance.provenance is not None:
        params, _ = instance.provenance
        comments.append(f"params: k={params.k} n={params.n} alpha={params.alpha!r}"
                        f" r={params.r!r} p={params.p!r} seed={params.seed}")
    with _open_out(args.output) as fp:
        write_dimacs(cnf, fp, comments=comments)
    return 0


def cmd_sweep(args) -> int:
    if args.vary == "r" and args.p is None:
        raise UsageError("rbcount sweep: error: --vary r requires -p")
    config = SweepConfig(
        k=args.k, n=args.n, alpha=args.alpha, r=args.r,
        grid_start=args.start, grid_stop=args.stop, grid_step=args.step,
        vary=args.vary, p=args.p if args.p is not None else 0.5,
        divisor=args.divisor, instances_per_point=args.instances,
        base_seed=args.seed, method=args.method, brute_cap=args.cap,
        jobs=args.jobs)

    def progress(row):
        print(f"{config.vary}={row.p:.4f} p_eff={row.p_eff:.4f} "
              f"yes={row.yes_fraction:.2f} wall_ms={row.wall_ms:.0f}",
              file=sys.stderr)

    rows = sweep_tightness(config, progress=progress)
    with _open_out(args.output) as fp:
        emit_csv(rows, fp)
    cross = crossing_point(rows)
    if cross is not None:
        print(f"crossing {cross!r}", file=sys.stderr)
    if args.svg is not None:
        marker = None
        if config.vary == "p":
            marker = critical_tightness(config.alpha, config.r, config.divisor)
        title = (f"k={config.k} n={config.n} alpha={config.alpha} "
                 f"{'r=' + str(config.r) if config.vary == 'p' else 'p=' + str(config.p)}")
        with _open_out(args.svg) as fp:
            emit_svg_plot(rows, fp, marker=marker, title=title)
    if args.manifest is not None:
        with _open_out(args.manifest) as fp:
            write_manifest(sweep_manifest(config), fp)
    return 0


def _parse_deltas(text: str) -> list[float]:
    try:
        deltas = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"rbcount accuracy: error: bad delta list {text!r}") from None
    if not deltas:
        raise UsageError("rbcount accuracy: error: empty delta list")
    return deltas


def cmd_accuracy(args) -> int:
    deltas = _parse_deltas(args.deltas)
    point = PointSpec(args.k, args.n, args.alpha, args.r, args.p)
    rows = accuracy_table([point], deltas, instances=args.instances,
                          base_seed=args.seed, method=args.method,
                          brute_cap=args.cap, jobs=args.jobs)
    with _open_out(args.output) as fp:
        emit_accuracy_csv(rows, deltas, fp)
    return 0


def cmd_compare(args) -> int:
    point = PointSpec(args.k, args.n, args.alpha, args.r, args.p)
    rows = estimator_comparison([point], instances=args.instances,
                                base_seed=args.seed, method=args.method,
                                brute_cap=args.cap, jobs=args.jobs)
    with _open_out(args.output) as fp:
        emit_comparison_csv(rows, fp)
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rbcount",
                     description="Generate, count, decide, estimate, encode and "
                                 "sweep random CSP instances with sharp count "
                                 "thresholds.")
    parser.add_argument("--version", action="version", version=f"rbcount {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub = subs.add_parser("gen", help="generate an instance")
    _add_params(sub)
    sub.add_argument("--seed", type=int, default=0, help="64-bit generator seed")
    sub.add_argument("-o", "--output", default="-", help="output path, - for stdout")
    sub.set_defaults(func=cmd_gen)

    sub = subs.add_parser("count", help="count solutions exactly")
    sub.add_argument("instance", help="instance path, - for stdin")
    _count_args(sub)
    sub.set_defaults(func=cmd_count)

    sub = subs.add_parser("decide", help="test count >= d^(n/divisor)")
    sub.add_argument("instance", help="instance path, - for stdin")
    sub.add_argument("--divisor", type=int, default=2, help="threshold divisor")
    sub.add_argument("--exit-code", action="store_true",
                     help="exit 0 for YES, 3 for NO")
    _count_args(sub)
    sub.set_defaults(func=cmd_decide)

    sub = subs.add_parser("estimate", help="closed-form count estimate")
    _add_params(sub)
    sub.add_argument("--delta", type=float, default=0.9,
                     help="relative interval half-width in (0, 1]")
    sub.add_argument("--divisor", type=int, default=2, help="threshold divisor")
    sub.add_argument("--band", type=float, default=0.005,
                     help="CRITICAL band around the critical tightness")
    sub.set_defaults(func=cmd_estimate)

    sub = subs.add_parser("encode", help="emit a DIMACS CNF encoding")
    sub.add_argument("instance", help="instance path, - for stdin")
    sub.add_argument("-o", "--output", default="-", help="output path, - for stdout")
    sub.set_defaults(func=cmd_encode)

    sub = subs.add_parser("sweep", help="grid sweep with exact counting")
    _add_params(sub, with_p=False)
    sub.add_argument("-p", type=float, default=None,
                     help="fixed tightness (required with --vary r)")
    sub.add_argument("--vary", choices=("p", "r"), default="p")
    sub.add_argument("--start", type=float, required=True)
    sub.add_argument("--stop", type=float, required=True)
    sub.add_argument("--step", type=float, required=True)
    sub.add_argument("--divisor", type=int, default=2)
    sub.add_argument("--instances", type=int, default=100,
                     help="instances per grid point")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1,
                     help="worker processes; results are identical for any value")
    _count_args(sub)
    sub.add_argument("-o", "--output", default="-", help="CSV path, - for stdout")
    sub.add_argument("--svg", default=None, help="also write an SVG plot here")
    sub.add_argument("--manifest", default=None, help="also write a manifest here")
    sub.set_defaults(func=cmd_sweep)

    sub = subs.add_parser("accuracy", help="interval coverage of exact counts")
    _add_params(sub)
    sub.add_argument("--deltas", default="0.5,0.6,0.7,0.8,0.9",
                     help="comma-separated interval widths")
    sub.add_argument("--instances", type=int, default=300)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1)
    _count_args(sub)
    sub.add_argument("-o", "--output", default="-", help="CSV path, - for stdout")
    sub.set_defaults(func=cmd_accuracy)

    sub = subs.add_parser("compare", help="sample mean count against the "
                                          "closed-form mean")
    _add_params(sub)
    sub.add_argument("--instances", type=int, default=300)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1)
    _count_args(sub)
    sub.add_argument("-o", "--output", default="-", help="CSV path, - for stdout")
    sub.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version print and exit 0
        return exc.code if isinstance(exc.code, int) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (InstanceFormatError, DimacsError, CapExceeded, ValueError,
            OSError) as exc:
        print(f"rbcount: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
