"""Two-stage benchmark harness: batch-size sweep, then method comparison.

Runs execute in two modes. ``wallclock`` times the reference models with a
monotonic high-resolution clock; it is honest but reflects toy-model
economics. ``simulated`` instead prices each run's trace with an analytic
latency model in which a batched target call costs a fixed base plus a
small marginal cost per extra row, the regime where assisted generation
pays off. Simulated runs are fully deterministic: identical plan and seed
produce byte-identical CSV/JSON reports, with the report timestamp derived
from the seed rather than the wall clock.

Warmup runs always execute but never enter the statistics.
"""

from __future__ import annotations

import csv
import io
import json
import platform
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .decode import (
    GenConfig,
    GenerationTrace,
    greedy_generate,
    sequential_assisted_generate,
    stairs_generate,
)
from .errors import InvalidConfigError, InvalidInputError
from .lm_core import LanguageModel, TokenSeq
from .metrics import TimingStats, bleu, speedup_percent, timing_stats

__all__ = [
    "METHODS",
    "LatencyModel",
    "ExperimentPlan",
    "RunRecord",
    "GroupStats",
    "MethodOutput",
    "BenchReport",
    "simulate_time",
    "run_sweep",
    "run_comparison",
    "write_report",
]

METHODS = ("original", "sequential_assisted", "stairs")


@dataclass(frozen=True)
class LatencyModel:
    """Analytic forward-call costs, in seconds.

    ``target_per_row`` is the marginal cost of each batch row beyond the
    first and must not exceed ``target_base``: batched prediction costing
    at most marginally more than a single prediction is the regime this
    harness models.
    """

    target_base: float
    target_per_row: float
    draft_per_call: float

    def __post_init__(self) -> None:
        for name in ("target_base", "target_per_row", "draft_per_call"):
            if getattr(self, name) < 0:
                raise InvalidConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.target_per_row > self.target_base:
            raise InvalidConfigError(
                f"target_per_row ({self.target_per_row}) must not exceed target_base ({self.target_base})"
            )


@dataclass
class ExperimentPlan:
    """Everything one benchmark stage needs, models included."""

    mode: str
    methods: list[str]
    batch_sizes: list[int]
    repetitions: int
    warmup_runs: int
    prompts: list[TokenSeq]
    target: LanguageModel
    draft: LanguageModel | None
    gen: GenConfig
    latency: LatencyModel
    seed: int
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in ("wallclock", "simulated"):
            raise InvalidConfigError(f"mode must be 'wallclock' or 'simulated', got {self.mode!r}")
        if not self.methods:
            raise InvalidConfigError("methods must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise InvalidConfigError(f"unknown method {m!r} (expected one of {METHODS})")
        if self.repetitions < 1:
            raise InvalidConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.warmup_runs < 0:
            raise InvalidConfigError(f"warmup_runs must be >= 0, got {self.warmup_runs}")
        if not self.batch_sizes or any(b < 1 for b in self.batch_sizes):
            raise InvalidConfigError(f"batch_sizes must be >= 1, got {self.batch_sizes}")
        if not self.prompts:
            raise InvalidConfigError("at least one prompt is required")
        if self.draft is None and set(self.methods) - {"original"}:
            raise InvalidConfigError("assisted methods require a draft model")

    def describe(self) -> dict:
        return {
            "mode": self.mode,
            "methods": list(self.methods),
            "batch_sizes": list(self.batch_sizes),
            "repetitions": self.repetitions,
            "warmup_runs": self.warmup_runs,
            "prompts": [list(p) for p in self.prompts],
            "target": self.target.name,
            "draft": self.draft.name if self.draft is not None else None,
            "max_new_tokens": self.gen.max_new_tokens,
            "stop_on_eos": self.gen.stop_on_eos,
            "latency": {
                "target_base": self.latency.target_base,
                "target_per_row": self.latency.target_per_row,
                "draft_per_call": self.latency.draft_per_call,
            },
            "seed": self.seed,
            **self.metadata,
        }


@dataclass(frozen=True)
class RunRecord:
    method: str
    batch_size: int
    prompt_id: int
    rep: int
    seconds: float
    target_batch_calls: int
    target_single_calls: int
    target_rows_scored: int
    draft_calls: int
    tokens_generated: int
    accepted_total: int


@dataclass(frozen=True)
class GroupStats:
    method: str
    batch_size: int
    stats: TimingStats


@dataclass(frozen=True)
class MethodOutput:
    method: str
    batch_size: int
    prompt_id: int
    token_ids: tuple[int, ...]
    token_strings: tuple[str, ...]


@dataclass
class BenchReport:
    """Raw per-run rows plus the aggregates the summary tables are built from."""

    kind: str
    plan: dict
    metadata: dict
    runs: list[RunRecord]
    group_stats: list[GroupStats]
    speedups: dict[str, float]
    bleu_vs_original: list[tuple[str, int, float]]
    outputs: list[MethodOutput]
    best_batch_size: int | None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "metadata": self.metadata,
            "plan": self.plan,
            "runs": [dict(vars(r)) for r in self.runs],
            "group_stats": [
                {"method": g.method, "batch_size": g.batch_size, **vars(g.stats)}
                for g in self.group_stats
            ],
            "speedups_vs_original": self.speedups,
            "bleu_vs_original": [
                {"method": m, "prompt_id": p, "bleu": v} for m, p, v in self.bleu_vs_original
            ],
            "outputs": [
                {
                    "method": o.method,
                    "batch_size": o.batch_size,
                    "prompt_id": o.prompt_id,
                    "token_ids": list(o.token_ids),
                    "text": " ".join(o.token_strings),
                }
                for o in self.outputs
            ],
            "best_batch_size": self.best_batch_size,
        }


def simulate_time(trace: GenerationTrace, lat: LatencyModel) -> float:
    """Price a trace with the latency model.

    Each target batch call costs ``target_base`` plus ``target_per_row``
    per row beyond the first; single calls cost ``target_base``; every
    draft call costs ``draft_per_call``.
    """
    batch_rows = trace.target_rows_scored - trace.target_single_calls
    extra_rows = batch_rows - trace.target_batch_calls
    return (
        trace.target_batch_calls * lat.target_base
        + extra_rows * lat.target_per_row
        + trace.target_single_calls * lat.target_base
        + trace.draft_calls * lat.draft_per_call
    )


def _run_once(plan: ExperimentPlan, method: str, batch_size: int, prompt: TokenSeq):
    cfg = replace(plan.gen, batch_size=batch_size)
    if method == "original":
        return greedy_generate(plan.target, prompt, replace(cfg, batch_size=1))
    if method == "sequential_assisted":
        return sequential_assisted_generate(plan.target, plan.draft, prompt, cfg)
    if method == "stairs":
        return stairs_generate(plan.target, plan.draft, prompt, cfg)
    raise InvalidConfigError(f"unknown method {method!r}")


def _timed_cell(plan: ExperimentPlan, method: str, batch_size: int, prompt_id: int):
    """Warmups plus timed repetitions for one (method, B, prompt) cell."""
    prompt = plan.prompts[prompt_id]
    try:
        for _ in range(plan.warmup_runs):
            _run_once(plan, method, batch_size, prompt)
        records = []
        output: TokenSeq = []
        for rep in range(plan.repetitions):
            if plan.mode == "wallclock":
                start = time.perf_counter()
                output, trace = _run_once(plan, method, batch_size, prompt)
                seconds = time.perf_counter() - start
            else:
                output, trace = _run_once(plan, method, batch_size, prompt)
                seconds = simulate_time(trace, plan.latency)
            records.append(
                RunRecord(
                    method=method,
                    batch_size=batch_size,
                    prompt_id=prompt_id,
                    rep=rep,
                    seconds=seconds,
                    target_batch_calls=trace.target_batch_calls,
                    target_single_calls=trace.target_single_calls,
                    target_rows_scored=trace.target_rows_scored,
                    draft_calls=trace.draft_calls,
                    tokens_generated=trace.tokens_generated,
                    accepted_total=trace.accepted_total,
                )
            )
    except Exception as exc:
        raise RuntimeError(
            f"benchmark cell failed: method={method}, batch_size={batch_size}, prompt={prompt_id}"
        ) from exc
    return records, output


def _metadata(plan: ExperimentPlan) -> dict:
    clock = time.get_clock_info("perf_counter")
    if plan.mode == "simulated":
        timestamp = f"deterministic-seed-{plan.seed}"
    else:
        timestamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return {
        "environment": f"{platform.python_implementation()} {platform.python_version()} "
        f"on {platform.platform()}, numpy {np.__version__}",
        "clock": f"perf_counter (monotonic={clock.monotonic}, resolution={clock.resolution})",
        "timestamp": timestamp,
        "mode": plan.mode,
        "seed": plan.seed,
    }


def _group(runs: list[RunRecord]) -> list[GroupStats]:
    keys: list[tuple[str, int]] = []
    for r in runs:
        if (r.method, r.batch_size) not in keys:
            keys.append((r.method, r.batch_size))
    return [
        GroupStats(
            method=m,
            batch_size=b,
            stats=timing_stats([r.seconds for r in runs if (r.method, r.batch_size) == (m, b)]),
        )
        for m, b in keys
    ]


def run_sweep(plan: ExperimentPlan) -> BenchReport:
    """Stage one: time stairs generation across every planned batch size."""
    if plan.methods != ["stairs"]:
        raise InvalidConfigError(f"a sweep plan must use methods=['stairs'], got {plan.methods}")
    if len(plan.batch_sizes) < 2:
        raise InvalidConfigError(f"a sweep needs at least 2 batch sizes, got {plan.batch_sizes}")

    runs: list[RunRecord] = []
    outputs: list[MethodOutput] = []
    vocab = plan.target.vocabulary
    for batch_size in plan.batch_sizes:
        for prompt_id in range(len(plan.prompts)):
            records, output = _timed_cell(plan, "stairs", batch_size, prompt_id)
            runs.extend(records)
            generated = output[len(plan.prompts[prompt_id]):]
            outputs.append(
                MethodOutput(
                    method="stairs",
                    batch_size=batch_size,
                    prompt_id=prompt_id,
                    token_ids=tuple(generated),
                    token_strings=tuple(vocab.token(t) for t in generated),
                )
            )
    groups = _group(runs)
    best = min(groups, key=lambda g: (g.stats.mean, g.batch_size)).batch_size
    return BenchReport(
        kind="sweep",
        plan=plan.describe(),
        metadata=_metadata(plan),
        runs=runs,
        group_stats=groups,
        speedups={},
        bleu_vs_original=[],
        outputs=outputs,
        best_batch_size=best,
    )


def run_comparison(plan: ExperimentPlan) -> BenchReport:
    """Stage two: original vs assisted methods at one fixed batch size."""
    if len(plan.batch_sizes) != 1:
        raise InvalidConfigError(
            f"a comparison plan fixes exactly one batch size, got {plan.batch_sizes}"
        )
    fixed_b = plan.batch_sizes[0]

    runs: list[RunRecord] = []
    outputs: list[MethodOutput] = []
    vocab = plan.target.vocabulary
    for method in plan.methods:
        method_b = 1 if method == "original" else fixed_b
        for prompt_id in range(len(plan.prompts)):
            records, output = _timed_cell(plan, method, method_b, prompt_id)
            runs.extend(records)
            generated = output[len(plan.prompts[prompt_id]):]
            outputs.append(
                MethodOutput(
                    method=method,
                    batch_size=method_b,
                    prompt_id=prompt_id,
                    token_ids=tuple(generated),
                    token_strings=tuple(vocab.token(t) for t in generated),
                )
            )

    groups = _group(runs)
    speedups: dict[str, float] = {}
    bleu_rows: list[tuple[str, int, float]] = []
    if "original" in plan.methods:
        mean_by_method = {
            g.method: g.stats.mean for g in groups
        }
        for method in plan.methods:
            if method != "original":
                speedups[method] = speedup_percent(mean_by_method["original"], mean_by_method[method])
        reference = {
            o.prompt_id: o.token_strings for o in outputs if o.method == "original"
        }
        for o in outputs:
            score = bleu(list(o.token_strings), list(reference[o.prompt_id]))
            bleu_rows.append((o.method, o.prompt_id, score.value))
    return BenchReport(
        kind="comparison",
        plan=plan.describe(),
        metadata=_metadata(plan),
        runs=runs,
        group_stats=groups,
        speedups=speedups,
        bleu_vs_original=bleu_rows,
        outputs=outputs,
        best_batch_size=None,
    )


CSV_HEADER = (
    "method,batch_size,prompt_id,rep,seconds,target_batch_calls,target_single_calls,"
    "target_rows_scored,draft_calls,tokens_generated,accepted_total"
)


def _csv_text(report: BenchReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in report.runs:
        writer.writerow(
            [
                r.method,
                r.batch_size,
                r.prompt_id,
                r.rep,
                repr(r.seconds),
                r.target_batch_calls,
                r.target_single_calls,
                r.target_rows_scored,
                r.draft_calls,
                r.tokens_generated,
                r.accepted_total,
            ]
        )
    return buf.getvalue()


def _md_text(report: BenchReport) -> str:
    lines = [f"# Benchmark summary ({report.kind})", ""]
    lines.append(f"- mode: {report.metadata['mode']}")
    lines.append(f"- seed: {report.metadata['seed']}")
    lines.append(f"- timestamp: {report.metadata['timestamp']}")
    lines.append(f"- environment: {report.metadata['environment']}")
    lines.append(f"- clock: {report.metadata['clock']}")
    lines.append("")
    lines.append("## Timing per group")
    lines.append("")
    lines.append("| method | batch_size | n | mean | median | std | min | p5 | p25 | p75 | p95 | max |")
    lines.append("|---|---|---|---|---|---|---|---|---|---|---|---|")
    for g in report.group_stats:
        s = g.stats
        cells = [g.method, str(g.batch_size), str(s.n)] + [
            f"{v:.6f}" for v in (s.mean, s.median, s.std, s.min, s.p5, s.p25, s.p75, s.p95, s.max)
        ]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    if report.best_batch_size is not None:
        lines.append(f"## Best batch size (lowest mean): {report.best_batch_size}")
        lines.append("")
    if report.speedups:
        lines.append("## Speedup vs original")
        lines.append("")
        lines.append("| method | speedup % |")
        lines.append("|---|---|")
        for method, pct in report.speedups.items():
            lines.append(f"| {method} | {pct:.2f} |")
        lines.append("")
    if report.bleu_vs_original:
        lines.append("## BLEU vs original output")
        lines.append("")
        lines.append("| method | prompt | BLEU |")
        lines.append("|---|---|---|")
        for method, prompt_id, value in report.bleu_vs_original:
            lines.append(f"| {method} | {prompt_id} | {value:.2f} |")
        lines.append("")
    return "\n".join(lines)


def write_report(report: BenchReport, formats: list[str], out_dir: str | Path) -> list[Path]:
    """Serialize a report; returns the written paths in format order."""
    known = {"csv", "json", "md"}
    unknown = set(formats) - known
    if unknown:
        raise InvalidConfigError(f"unknown report formats: {sorted(unknown)} (expected subset of {sorted(known)})")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for fmt in formats:
        if fmt == "csv":
            path = out / f"{report.kind}_runs.csv"
            path.write_text(_csv_text(report), encoding="utf-8")
        elif fmt == "json":
            path = out / f"{report.kind}_report.json"
            path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        else:
            path = out / f"{report.kind}_summary.md"
            path.write_text(_md_text(report), encoding="utf-8")
        paths.append(path)
    return paths
