from __future__ import annotations

import math
import random

import pytest

from oracles import naive_bleu
from stairgen.errors import InvalidInputError
from stairgen.metrics import bleu, speedup_percent, timing_stats

# Frozen from a pinned run; cross-checked against the list-scan oracle.
FIXTURE_CANDIDATE = "the cat sat on the mat near the old door".split()
FIXTURE_REFERENCE = "the cat sat on a mat by the old door".split()
FIXTURE_BLEU = 39.2814650900513

# Frozen stats of 1000 draws from random.Random(20240517).random().
GOLDEN_TIMING = {
    "n": 1000,
    "mean": 0.5152647283211923,
    "median": 0.5185375918531601,
    "min": 0.000766741093145562,
    "max": 0.9988847329902234,
    "std": 0.2931514508755815,
    "p5": 0.05323394280509708,
    "p25": 0.26787871570654676,
    "p75": 0.7762237029224601,
    "p95": 0.9616033637418363,
}


def test_bleu_identity_is_100():
    tokens = "one two three four five".split()
    score = bleu(tokens, tokens)
    assert score.value == 100.0
    assert score.precisions == (1.0, 1.0, 1.0, 1.0)
    assert score.brevity_penalty == 1.0


def test_bleu_zero_fourgram_overlap_is_zero():
    candidate = "a b c d e".split()
    reference = "a x c y e".split()
    score = bleu(candidate, reference)
    assert score.value == 0.0
    assert score.precisions[3] == 0.0
    assert score.precisions[0] > 0.0


def test_bleu_fixture_matches_oracle_and_golden():
    score = bleu(FIXTURE_CANDIDATE, FIXTURE_REFERENCE)
    assert score.value == pytest.approx(naive_bleu(FIXTURE_CANDIDATE, FIXTURE_REFERENCE), abs=1e-9)
    assert score.value == pytest.approx(FIXTURE_BLEU, abs=1e-9)
    assert score.brevity_penalty == 1.0


def test_bleu_random_against_oracle():
    rng = random.Random(5)
    alphabet = ["w%d" % i for i in range(6)]
    for _ in range(200):
        cand = [rng.choice(alphabet) for _ in range(rng.randint(1, 12))]
        ref = [rng.choice(alphabet) for _ in range(rng.randint(1, 12))]
        assert bleu(cand, ref).value == pytest.approx(naive_bleu(cand, ref), abs=1e-9)


def test_bleu_brevity_penalty():
    candidate = "a b c d".split()
    reference = "a b c d e f g h".split()
    score = bleu(candidate, reference)
    assert score.brevity_penalty == pytest.approx(math.exp(1 - 8 / 4))
    assert 0.0 < score.value < 100.0


def test_bleu_empty_candidate_scores_zero():
    score = bleu([], ["a", "b"])
    assert score.value == 0.0


def test_bleu_empty_reference_raises():
    with pytest.raises(InvalidInputError):
        bleu(["a"], [])


def test_bleu_reversal_never_beats_identity():
    rng = random.Random(6)
    for _ in range(50):
        tokens = [f"t{rng.randrange(8)}" for _ in range(rng.randint(5, 12))]
        if tokens == tokens[::-1]:
            continue
        reversed_p4 = bleu(tokens[::-1], tokens).precisions[3]
        assert reversed_p4 <= bleu(tokens, tokens).precisions[3] == 1.0


def test_timing_stats_single_sample():
    s = timing_stats([2.0])
    assert (s.n, s.mean, s.median, s.min, s.max, s.std) == (1, 2.0, 2.0, 2.0, 2.0, 0.0)
    assert s.p5 == s.p25 == s.p75 == s.p95 == 2.0


def test_timing_stats_nearest_rank():
    s = timing_stats([5, 4, 3, 2, 1])
    assert s.median == 3
    assert s.p25 == 2
    assert s.p75 == 4
    assert s.p5 == 1
    assert s.p95 == 5


def test_timing_stats_golden():
    rng = random.Random(20240517)
    s = timing_stats([rng.random() for _ in range(1000)])
    for key, want in GOLDEN_TIMING.items():
        assert getattr(s, key) == want, key


def test_timing_stats_invariant_chain():
    rng = random.Random(77)
    for _ in range(100):
        samples = [rng.expovariate(1.0) for _ in range(rng.randint(1, 40))]
        s = timing_stats(samples)
        assert s.min <= s.p5 <= s.p25 <= s.median <= s.p75 <= s.p95 <= s.max
        assert s.n == len(samples)


def test_timing_stats_empty_raises():
    with pytest.raises(InvalidInputError):
        timing_stats([])


def test_speedup_reference_points():
    assert speedup_percent(0.4853, 0.4016) == pytest.approx(17.24, abs=0.01)
    assert speedup_percent(1.2232, 1.1059) == pytest.approx(9.58, abs=0.01)
    assert speedup_percent(3.3, 3.3) == 0.0
    assert speedup_percent(1.0, 1.5) < 0.0


def test_speedup_rejects_non_positive():
    with pytest.raises(InvalidInputError):
        speedup_percent(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        speedup_percent(1.0, -2.0)


def test_speedup_inverse_consistency():
    rng = random.Random(8)
    for _ in range(100):
        a = rng.uniform(0.01, 10.0)
        b = rng.uniform(0.01, 10.0)
        assert abs(speedup_percent(a, b) + speedup_percent(b, a) * (b / a)) < 1e-9
