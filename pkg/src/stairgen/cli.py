"""Command-line interface: generate, sweep, compare, and bleu subcommands.

Exit codes: 0 on success, 1 for runtime or I/O failures, 2 for invalid
configuration or inputs. Report-writing commands print every written file
path, one per line, before the summary lines.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import bench
from .config import CliConfig, load_config
from .decode import (
    GenerationTrace,
    greedy_generate,
    sequential_assisted_generate,
    stairs_generate,
)
from .errors import InvalidConfigError, InvalidInputError
from .metrics import bleu
from .plots import render_figures

_CONFIG_ERRORS = (InvalidConfigError, InvalidInputError, ValueError)


def _formats(raw: str) -> list[str]:
    return [f.strip() for f in raw.split(",") if f.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a config file (default: $STAIRGEN_CONFIG or packaged default)")
    parser.add_argument("--seed", type=int, help="override the plan seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--format", type=_formats, help="report formats, e.g. csv,json,md")
    parser.add_argument("--mode", choices=["wallclock", "simulated"], help="override the timing mode")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    parser.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stairgen",
        description="Greedy decoding engine with stairs-assisted generation and a benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="run one generation and print the output tokens")
    gen.add_argument("--method", choices=list(bench.METHODS), default="stairs")
    gen.add_argument("--batch-size", type=int, help="stairs rows per iteration (draft length + 1)")
    gen.add_argument("--max-new-tokens", type=int, help="override the configured token budget")
    gen.add_argument("--prompt", help="prompt override: token ids '1,2,3' or text for ngram targets")
    _add_common(gen)
    gen.set_defaults(func=cmd_generate)

    sweep = sub.add_parser("sweep", help="stage one: time stairs generation across batch sizes")
    _add_common(sweep)
    sweep.set_defaults(func=cmd_sweep)

    comp = sub.add_parser("compare", help="stage two: compare methods at one batch size")
    comp.add_argument("--batch-size", type=int, help="fixed stairs batch size (default: config, or the sweep winner)")
    _add_common(comp)
    comp.set_defaults(func=cmd_compare)

    bl = sub.add_parser("bleu", help="BLEU of a candidate file against a reference file")
    bl.add_argument("candidate")
    bl.add_argument("reference")
    bl.set_defaults(func=cmd_bleu)
    return parser


def _load(args: argparse.Namespace) -> CliConfig:
    return load_config(
        args.config,
        seed=args.seed,
        mode=args.mode,
        out_dir=args.out,
        formats=args.format,
    )


def _print_trace(trace: GenerationTrace) -> None:
    print("iteration  proposed  accepted  committed")
    for i, it in enumerate(trace.iterations, start=1):
        print(f"{i:>9}  {it.draft_proposed:>8}  {it.accepted:>8}  {it.committed:>9}")
    print(
        f"totals: target_batch_calls={trace.target_batch_calls} "
        f"target_single_calls={trace.target_single_calls} "
        f"target_rows_scored={trace.target_rows_scored} "
        f"draft_calls={trace.draft_calls} "
        f"tokens_generated={trace.tokens_generated}"
    )


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args)
        prompts = cfg.prompts
        if args.prompt is not None:
            from .config import _parse_prompts

            prompts = _parse_prompts(args.prompt, cfg.target)
        prompt = prompts[0]
        max_new = args.max_new_tokens if args.max_new_tokens is not None else cfg.max_new_tokens
        batch_size = args.batch_size
        if batch_size is None:
            batch_size = cfg.compare_batch_size if cfg.compare_batch_size is not None else 4
        gen_cfg = replace(cfg.gen_config(batch_size), max_new_tokens=max_new)
        if args.method != "original" and cfg.draft is None:
            raise InvalidConfigError(f"method {args.method!r} requires a [draft] model in the config")
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.method == "original":
            output, trace = greedy_generate(cfg.target, prompt, replace(gen_cfg, batch_size=1))
        elif args.method == "sequential_assisted":
            output, trace = sequential_assisted_generate(cfg.target, cfg.draft, prompt, gen_cfg)
        else:
            output, trace = stairs_generate(cfg.target, cfg.draft, prompt, gen_cfg)
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1

    generated = output[len(prompt):]
    print(cfg.join_tokens([cfg.target.vocabulary.token(t) for t in generated]))
    if args.verbose:
        _print_trace(trace)
    return 0


def _write_outputs(cfg: CliConfig, args: argparse.Namespace, report: bench.BenchReport) -> list:
    paths = bench.write_report(report, cfg.formats, cfg.out_dir)
    if cfg.figures and not args.no_figures:
        paths += render_figures(report, cfg.out_dir)
    return paths


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args)
        if len(cfg.batch_sizes) < 2:
            raise InvalidConfigError(f"sweep needs at least 2 batch sizes, got {cfg.batch_sizes}")
        plan = cfg.plan(
            methods=["stairs"],
            batch_sizes=cfg.batch_sizes,
            repetitions=cfg.sweep_repetitions,
        )
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        report = bench.run_sweep(plan)
        paths = _write_outputs(cfg, args, report)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1

    for p in paths:
        print(p)
    print(f"best batch size by mean {cfg.mode} time: B={report.best_batch_size}")
    return 0


def _resolve_compare_batch_size(cfg: CliConfig, args: argparse.Namespace) -> tuple[int, str]:
    if args.batch_size is not None:
        return args.batch_size, "pinned by --batch-size"
    if cfg.compare_batch_size is not None:
        return cfg.compare_batch_size, "pinned by config"
    # Sweep winner: deterministic in simulated mode, so one repetition suffices.
    reps = 1 if cfg.mode == "simulated" else cfg.sweep_repetitions
    plan = cfg.plan(methods=["stairs"], batch_sizes=cfg.batch_sizes, repetitions=reps)
    winner = bench.run_sweep(plan).best_batch_size
    return winner, "sweep winner"


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args)
        if len(cfg.methods) < 2:
            raise InvalidConfigError(f"compare needs at least 2 methods, got {cfg.methods}")
        if len(cfg.batch_sizes) < 2 and cfg.compare_batch_size is None and args.batch_size is None:
            raise InvalidConfigError("cannot resolve a comparison batch size from a single-entry sweep")
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        batch_size, origin = _resolve_compare_batch_size(cfg, args)
        plan = cfg.plan(
            methods=cfg.methods,
            batch_sizes=[batch_size],
            repetitions=cfg.compare_repetitions,
        )
        report = bench.run_comparison(plan)
        paths = _write_outputs(cfg, args, report)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1

    for p in paths:
        print(p)
    print(f"comparison batch size: B={batch_size} ({origin})")
    print("method                speedup%   BLEU-vs-original")
    bleu_by_method = {m: v for m, _, v in report.bleu_vs_original}
    for method in plan.methods:
        pct = report.speedups.get(method)
        pct_s = f"{pct:8.2f}" if pct is not None else "       -"
        bl = bleu_by_method.get(method)
        bl_s = f"{bl:8.2f}" if bl is not None else "       -"
        print(f"{method:<20} {pct_s}   {bl_s}")
    return 0


def cmd_bleu(args: argparse.Namespace) -> int:
    try:
        with open(args.candidate, encoding="utf-8") as f:
            candidate = f.read().split()
        with open(args.reference, encoding="utf-8") as f:
            reference = f.read().split()
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    try:
        score = bleu(candidate, reference)
    except InvalidInputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    print(f"{score.value:.2f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
