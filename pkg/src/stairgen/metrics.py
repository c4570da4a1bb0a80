"""Output-accuracy and timing metrics for benchmark reports.

BLEU is the single-reference sentence variant on a 0-100 scale: modified
n-gram precisions with count clipping, a brevity penalty, and no smoothing
(any zero precision zeroes the score). Scores are computed over token
strings as produced by the harness, not over re-tokenized text.

Percentiles use the nearest-rank method so frozen golden values are
portable across platforms.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidInputError

__all__ = ["BleuScore", "TimingStats", "bleu", "timing_stats", "speedup_percent"]


@dataclass(frozen=True)
class BleuScore:
    """0-100 BLEU value with its n-gram precisions and brevity penalty."""

    value: float
    precisions: tuple[float, ...]
    brevity_penalty: float


@dataclass(frozen=True)
class TimingStats:
    """Descriptive statistics over one group of timed runs, in seconds."""

    n: int
    mean: float
    median: float
    min: float
    max: float
    std: float
    p5: float
    p25: float
    p75: float
    p95: float


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i: i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[str], reference: Sequence[str], max_n: int = 4) -> BleuScore:
    """Sentence BLEU of ``candidate`` against a single ``reference``.

    Identical sequences of length >= ``max_n`` score exactly 100. A
    candidate with zero overlap at any n-gram order scores 0; that includes
    any candidate shorter than ``max_n`` tokens, since it has no highest-
    order n-grams at all.
    """
    if not reference:
        raise InvalidInputError("reference must be non-empty")
    if not candidate:
        return BleuScore(value=0.0, precisions=(0.0,) * max_n, brevity_penalty=1.0)

    precisions = []
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        if not cand_counts:
            precisions.append(0.0)
            continue
        ref_counts = _ngram_counts(reference, n)
        clipped = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        precisions.append(clipped / sum(cand_counts.values()))

    c, r = len(candidate), len(reference)
    brevity_penalty = 1.0 if c >= r else math.exp(1.0 - r / c)
    if min(precisions) == 0.0:
        value = 0.0
    else:
        value = 100.0 * brevity_penalty * math.exp(math.fsum(math.log(p) for p in precisions) / max_n)
    return BleuScore(value=value, precisions=tuple(precisions), brevity_penalty=brevity_penalty)


def _nearest_rank(ordered: list[float], pct: float) -> float:
    rank = math.ceil(pct / 100.0 * len(ordered))
    return ordered[max(rank, 1) - 1]


def timing_stats(samples: Sequence[float]) -> TimingStats:
    """Exact order statistics over ``samples``; population std."""
    if not samples:
        raise InvalidInputError("timing_stats requires at least one sample")
    ordered = sorted(samples)
    return TimingStats(
        n=len(ordered),
        mean=statistics.fmean(ordered),
        median=statistics.median(ordered),
        min=ordered[0],
        max=ordered[-1],
        std=statistics.pstdev(ordered),
        p5=_nearest_rank(ordered, 5),
        p25=_nearest_rank(ordered, 25),
        p75=_nearest_rank(ordered, 75),
        p95=_nearest_rank(ordered, 95),
    )


def speedup_percent(baseline_mean: float, variant_mean: float) -> float:
    """How much faster the variant is than the baseline, in percent.

    Negative when the variant is slower.
    """
    if baseline_mean <= 0 or variant_mean <= 0:
        raise InvalidInputError(
            f"means must be positive, got baseline={baseline_mean}, variant={variant_mean}"
        )
    return 100.0 * (baseline_mean - variant_mean) / baseline_mean
