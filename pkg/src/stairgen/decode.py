"""Generation strategies: plain greedy, sequential assisted, and stairs assisted.

All three commit exactly the target model's greedy path, token for token;
they differ only in how many target forward calls that path costs. The
assisted strategies let a draft model propose ``batch_size - 1`` tokens per
iteration, then validate them against the target's argmax at each position:

- ``sequential_assisted_generate`` scores each validation prefix with an
  individual single-row target call, stopping at the first mismatch.
- ``stairs_generate`` scores all nested prefixes (the "stairs" rows) in one
  batch call and applies the same ground-truth walk to the row argmaxes.

Every accepted draft token is one the target would have produced anyway,
and each iteration additionally commits the target's own next token (the
bonus token), so progress is guaranteed and the output is identical to
``greedy_generate`` on the target alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ContractViolationError, InvalidConfigError
from .lm_core import LanguageModel, TokenId, TokenSeq, argmax_token

__all__ = [
    "GenConfig",
    "StairsBatch",
    "ValidationResult",
    "IterationRecord",
    "GenerationTrace",
    "greedy_generate",
    "draft_propose",
    "build_stairs_batch",
    "stairs_validate",
    "stairs_generate",
    "sequential_assisted_generate",
]


@dataclass(frozen=True)
class GenConfig:
    """Decoding loop parameters.

    ``batch_size`` counts stairs rows, so the draft lookahead is
    ``batch_size - 1`` and ``batch_size=1`` degenerates to plain greedy
    decoding for every strategy.
    """

    max_new_tokens: int
    batch_size: int = 1
    stop_on_eos: bool = True

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise InvalidConfigError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if self.batch_size < 1:
            raise InvalidConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class StairsBatch:
    """Nested incremental prefixes scored by the target in one call.

    ``rows[0]`` is the bare committed prefix and ``rows[i]`` extends it by
    the first ``i`` draft tokens, so each row is a proper prefix of the next.
    """

    rows: tuple[tuple[int, ...], ...]
    draft: tuple[int, ...]


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of one ground-truth walk over a scored stairs batch."""

    accepted_draft_count: int
    committed: tuple[int, ...]
    hit_eos: bool


@dataclass(frozen=True)
class IterationRecord:
    draft_proposed: int
    accepted: int
    committed: int


@dataclass
class GenerationTrace:
    """Per-run accounting of model calls and committed tokens."""

    iterations: list[IterationRecord] = field(default_factory=list)
    target_single_calls: int = 0
    target_batch_calls: int = 0
    target_rows_scored: int = 0
    draft_calls: int = 0
    tokens_generated: int = 0

    @property
    def accepted_total(self) -> int:
        return sum(it.accepted for it in self.iterations)


def greedy_generate(
    model: LanguageModel, prompt: Sequence[int], cfg: GenConfig
) -> tuple[TokenSeq, GenerationTrace]:
    """Extend ``prompt`` one argmax token at a time.

    Stops after ``cfg.max_new_tokens`` tokens or, when ``cfg.stop_on_eos``
    is set, right after emitting the vocabulary's EOS token.
    """
    eos = model.vocabulary.eos_id
    out = list(prompt)
    trace = GenerationTrace()
    for _ in range(cfg.max_new_tokens):
        token = argmax_token(model.score_next(out))
        trace.target_single_calls += 1
        trace.target_rows_scored += 1
        out.append(token)
        trace.iterations.append(IterationRecord(0, 0, 1))
        trace.tokens_generated += 1
        if cfg.stop_on_eos and token == eos:
            break
    return out, trace


def draft_propose(draft_model: LanguageModel, prefix: Sequence[int], k: int) -> TokenSeq:
    """Greedy k-token proposal from the draft model; stops early only at EOS."""
    if k < 0:
        raise InvalidConfigError(f"draft length must be >= 0, got {k}")
    eos = draft_model.vocabulary.eos_id
    row = list(prefix)
    proposal: TokenSeq = []
    for _ in range(k):
        token = argmax_token(draft_model.score_next(row))
        proposal.append(token)
        row.append(token)
        if token == eos:
            break
    return proposal


def build_stairs_batch(prefix: Sequence[int], draft: Sequence[int]) -> StairsBatch:
    """Break ``prefix`` + ``draft`` into the nested rows scored in one batch."""
    base = tuple(prefix)
    rows = tuple(base + tuple(draft[:i]) for i in range(len(draft) + 1))
    return StairsBatch(rows=rows, draft=tuple(draft))


def stairs_validate(
    draft: Sequence[int],
    row_argmaxes: Sequence[TokenId],
    eos_id: TokenId | None = None,
) -> ValidationResult:
    """Ground-truth walk over per-row argmaxes.

    Accepts draft tokens left to right while each equals the target argmax
    after the corresponding row, then commits one bonus token: the target
    argmax after the last accepted row. With ``eos_id`` given, the committed
    block is truncated at the first EOS inclusive.
    """
    if len(row_argmaxes) != len(draft) + 1:
        raise ContractViolationError(
            f"expected {len(draft) + 1} row argmaxes for a draft of {len(draft)} tokens, got {len(row_argmaxes)}"
        )
    accepted = 0
    while accepted < len(draft) and draft[accepted] == row_argmaxes[accepted]:
        accepted += 1
    committed = list(draft[:accepted])
    committed.append(row_argmaxes[accepted])
    hit_eos = False
    if eos_id is not None and eos_id in committed:
        committed = committed[: committed.index(eos_id) + 1]
        hit_eos = True
    return ValidationResult(
        accepted_draft_count=min(accepted, len(committed)),
        committed=tuple(committed),
        hit_eos=hit_eos,
    )


def _check_pair(target: LanguageModel, draft_model: LanguageModel) -> None:
    if target.vocabulary != draft_model.vocabulary:
        raise InvalidConfigError(
            f"target and draft must share one vocabulary ({target.name} vs {draft_model.name})"
        )


def stairs_generate(
    target: LanguageModel,
    draft_model: LanguageModel,
    prompt: Sequence[int],
    cfg: GenConfig,
) -> tuple[TokenSeq, GenerationTrace]:
    """Assisted generation with batched stairs validation.

    Each iteration spends one target batch call on ``batch_size`` nested
    rows and commits every validated draft token plus the bonus token. The
    committed block is truncated at the ``max_new_tokens`` cap, and partial
    iterations stay visible in the trace.
    """
    _check_pair(target, draft_model)
    eos = target.vocabulary.eos_id
    out = list(prompt)
    trace = GenerationTrace()
    produced = 0
    while produced < cfg.max_new_tokens:
        draft = draft_propose(draft_model, out, cfg.batch_size - 1)
        trace.draft_calls += len(draft)
        batch = build_stairs_batch(out, draft)
        row_logits = target.score_batch(batch.rows)
        trace.target_batch_calls += 1
        trace.target_rows_scored += len(batch.rows)
        argmaxes = [argmax_token(logits) for logits in row_logits]
        result = stairs_validate(draft, argmaxes, eos_id=eos if cfg.stop_on_eos else None)
        commit = list(result.committed[: cfg.max_new_tokens - produced])
        out.extend(commit)
        produced += len(commit)
        trace.tokens_generated += len(commit)
        trace.iterations.append(
            IterationRecord(len(draft), min(result.accepted_draft_count, len(commit)), len(commit))
        )
        if cfg.stop_on_eos and commit and commit[-1] == eos:
            break
    return out, trace


def sequential_assisted_generate(
    target: LanguageModel,
    draft_model: LanguageModel,
    prompt: Sequence[int],
    cfg: GenConfig,
) -> tuple[TokenSeq, GenerationTrace]:
    """Assisted generation that validates draft tokens with single target calls.

    Acceptance semantics match ``stairs_generate`` exactly; only the cost
    profile differs: the left-to-right walk scores one row per target call
    and stops at the first mismatch, so the per-iteration call count is
    ``accepted + 1`` instead of one batch call.
    """
    _check_pair(target, draft_model)
    eos = target.vocabulary.eos_id
    out = list(prompt)
    trace = GenerationTrace()
    produced = 0
    while produced < cfg.max_new_tokens:
        draft = draft_propose(draft_model, out, cfg.batch_size - 1)
        trace.draft_calls += len(draft)
        row = list(out)
        argmaxes: list[int] = []
        for i in range(len(draft) + 1):
            token = argmax_token(target.score_next(row))
            trace.target_single_calls += 1
            trace.target_rows_scored += 1
            argmaxes.append(token)
            if i < len(draft) and draft[i] == token:
                row.append(token)
            else:
                break
        walked = len(argmaxes) - 1
        result = stairs_validate(draft[:walked], argmaxes, eos_id=eos if cfg.stop_on_eos else None)
        commit = list(result.committed[: cfg.max_new_tokens - produced])
        out.extend(commit)
        produced += len(commit)
        trace.tokens_generated += len(commit)
        trace.iterations.append(
            IterationRecord(len(draft), min(result.accepted_draft_count, len(commit)), len(commit))
        )
        if cfg.stop_on_eos and commit and commit[-1] == eos:
            break
    return out, trace
