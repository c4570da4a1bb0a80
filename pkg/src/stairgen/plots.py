"""Figure rendering for benchmark reports.

Figures land next to the CSV/JSON/markdown files: the sweep report gets a
mean-time-vs-batch-size curve with p5/p95 whiskers and the comparison
report gets a per-method bar chart annotated with speedups. PNG bytes are
not covered by the byte-identity guarantee of the delimited reports.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchReport


def _whiskers(groups):
    # With identical repetitions the float mean can undershoot p5 by an ulp.
    means = [g.stats.mean for g in groups]
    lower = [max(0.0, g.stats.mean - g.stats.p5) for g in groups]
    upper = [max(0.0, g.stats.p95 - g.stats.mean) for g in groups]
    return means, [lower, upper]


def _sweep_figure(report: BenchReport, path: Path) -> None:
    groups = sorted(report.group_stats, key=lambda g: g.batch_size)
    xs = [g.batch_size for g in groups]
    means, yerr = _whiskers(groups)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(xs, means, yerr=yerr, fmt="o-", capsize=3, label="stairs (mean, p5-p95)")
    if report.best_batch_size is not None:
        best = next(g for g in groups if g.batch_size == report.best_batch_size)
        ax.scatter([best.batch_size], [best.stats.mean], s=120, marker="*", color="tab:red",
                   zorder=5, label=f"best B={best.batch_size}")
    ax.set_xlabel("batch size (stairs rows)")
    ax.set_ylabel(f"seconds per generation ({report.metadata['mode']})")
    ax.set_title("Stairs assisted generation: inference time vs batch size")
    ax.set_xticks(xs)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _comparison_figure(report: BenchReport, path: Path) -> None:
    groups = report.group_stats
    labels = [f"{g.method}\n(B={g.batch_size})" for g in groups]
    means, yerr = _whiskers(groups)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    bars = ax.bar(labels, means, yerr=yerr, capsize=4, color="tab:blue", alpha=0.85)
    for bar, g in zip(bars, groups):
        pct = report.speedups.get(g.method)
        if pct is not None:
            ax.annotate(f"{pct:+.2f}% vs original",
                        xy=(bar.get_x() + bar.get_width() / 2, bar.get_height()),
                        xytext=(0, 6), textcoords="offset points", ha="center", fontsize=9)
    ax.set_ylabel(f"seconds per generation ({report.metadata['mode']})")
    ax.set_title("Inference time by generation method")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_figures(report: BenchReport, out_dir: str | Path) -> list[Path]:
    """Render the report's figure(s) into ``out_dir``; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{report.kind}_times.png"
    if report.kind == "sweep":
        _sweep_figure(report, path)
    else:
        _comparison_figure(report, path)
    return [path]
