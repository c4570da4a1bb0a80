"""Domain types and deterministic reference language models.

A language model here is a pure function from a token-id prefix to one
unnormalized score per vocabulary entry; the next token is the argmax.
Three reference implementations make every decoding property testable
without trained weights:

- ``HashLM``: scores derived from a fixed 64-bit mix of (seed, trailing
  context), so outputs are reproducible bit-for-bit across platforms.
- ``NGramLM``: add-constant smoothed counts from a text corpus, with
  recursive back-off to shorter contexts; gives readable demo text.
- ``AgreementDraft``: wraps a target model and matches its argmax with a
  configurable, hash-driven probability; models an assistant of tunable
  quality.

The mixing function is SplitMix64, chosen because it is trivially
portable and its golden values can be frozen in tests.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolationError, InvalidConfigError, InvalidInputError

TokenId = int
TokenSeq = list[int]
Logits = np.ndarray

EOS_TOKEN = "<eos>"
PAD_TOKEN = "<pad>"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_EOS_SALT = 0xE05E05E05E05E05
_ALT_SALT = 0xA17A17A17A17A17

_GOLDEN_U = np.uint64(_GOLDEN)
_MIX1_U = np.uint64(_MIX1)
_MIX2_U = np.uint64(_MIX2)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)


def _mix(x: int) -> int:
    """SplitMix64 finalizer over a 64-bit state."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return x ^ (x >> 31)


def _mix_vec(x: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 over a uint64 array."""
    x = x + _GOLDEN_U
    x = (x ^ (x >> _SH30)) * _MIX1_U
    x = (x ^ (x >> _SH27)) * _MIX2_U
    return x ^ (x >> _SH31)


def _hash_tokens(seed: int, ids: Sequence[int]) -> int:
    h = _mix(seed & _MASK64)
    for t in ids:
        h = _mix(h ^ (t + 1))
    return h


def _u01(h: int) -> float:
    return h / 2**64


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token strings plus the reserved end-of-sequence and pad ids."""

    tokens: tuple[str, ...]
    eos_id: int
    pad_id: int

    def __post_init__(self) -> None:
        if len(self.tokens) < 2:
            raise InvalidConfigError(f"vocabulary needs at least 2 tokens, got {len(self.tokens)}")
        if len(set(self.tokens)) != len(self.tokens):
            raise InvalidConfigError("vocabulary token strings must be unique")
        for name, idx in (("eos_id", self.eos_id), ("pad_id", self.pad_id)):
            if not 0 <= idx < len(self.tokens):
                raise InvalidConfigError(f"{name}={idx} out of range for {len(self.tokens)} tokens")
        if self.eos_id == self.pad_id:
            raise InvalidConfigError("eos_id and pad_id must differ")

    @property
    def size(self) -> int:
        return len(self.tokens)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    def id_of(self, token: str) -> int:
        try:
            return self.tokens.index(token)
        except ValueError:
            raise InvalidInputError(f"token {token!r} not in vocabulary") from None

    @classmethod
    def from_content(cls, content_tokens: Sequence[str]) -> "Vocabulary":
        """Vocabulary over the given content tokens with reserved EOS/PAD appended."""
        for reserved in (EOS_TOKEN, PAD_TOKEN):
            if reserved in content_tokens:
                raise InvalidInputError(f"content tokens may not contain reserved token {reserved!r}")
        tokens = tuple(content_tokens) + (EOS_TOKEN, PAD_TOKEN)
        return cls(tokens=tokens, eos_id=len(tokens) - 2, pad_id=len(tokens) - 1)

    @classmethod
    def synthetic(cls, size: int) -> "Vocabulary":
        """Placeholder vocabulary of ``size`` entries: tok0..tokN, <eos>, <pad>."""
        if size < 3:
            raise InvalidConfigError(f"synthetic vocabulary needs size >= 3, got {size}")
        return cls.from_content([f"tok{i}" for i in range(size - 2)])


def argmax_token(logits: Logits) -> TokenId:
    """Index of the maximum score; ties break toward the lowest token id."""
    return int(np.argmax(logits))


class LanguageModel(ABC):
    """Deterministic next-token scorer over token-id prefixes.

    Instances are immutable after construction and safe to share across
    concurrent readers. ``score_batch`` is defined row-by-row in terms of
    ``score_next``, so batch and single scoring agree bit-exactly.
    Returned arrays are read-only and may be cached/shared.
    """

    _CACHE_LIMIT = 1 << 20

    def __init__(self, vocabulary: Vocabulary, name: str):
        self._vocabulary = vocabulary
        self._name = name
        self._cache: dict[tuple[int, ...], Logits] = {}

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocabulary

    @property
    def name(self) -> str:
        return self._name

    def score_next(self, prefix: Sequence[int]) -> Logits:
        """Scores for every vocabulary entry as the next token after ``prefix``."""
        key = tuple(prefix)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        self._validate_prefix(key)
        logits = self._logits(key)
        logits.flags.writeable = False
        if len(self._cache) >= self._CACHE_LIMIT:
            self._cache.clear()
        self._cache[key] = logits
        return logits

    def score_batch(self, rows: Sequence[Sequence[int]]) -> list[Logits]:
        """Score several prefix rows in one call; result order matches input order."""
        if not rows:
            raise InvalidInputError("score_batch requires at least one row")
        return [self.score_next(row) for row in rows]

    def _validate_prefix(self, prefix: tuple[int, ...]) -> None:
        size = self._vocabulary.size
        pad = self._vocabulary.pad_id
        for pos, token_id in enumerate(prefix):
            if not 0 <= token_id < size:
                raise InvalidInputError(
                    f"token id {token_id} at position {pos} is out of range for vocabulary of size {size}"
                )
            if token_id == pad:
                raise InvalidInputError(f"pad token at position {pos}; models never score padded rows")

    @abstractmethod
    def _logits(self, prefix: tuple[int, ...]) -> Logits:
        """Compute the logits for a validated prefix."""


class HashLM(LanguageModel):
    """Pseudo-random but fully deterministic model.

    Scores are a pure function of (seed, last ``context_window`` token ids).
    ``eos_bias`` is the fraction of prefixes at which EOS is forced to be
    the argmax; at every other prefix EOS can never win, which makes
    "no termination" regimes easy to set up in tests and benchmarks.
    """

    def __init__(
        self,
        seed: int,
        vocab_size: int = 32,
        context_window: int = 4,
        eos_bias: float = 0.0,
        vocabulary: Vocabulary | None = None,
    ):
        if context_window < 1:
            raise InvalidConfigError(f"context_window must be >= 1, got {context_window}")
        if not 0.0 <= eos_bias <= 1.0:
            raise InvalidConfigError(f"eos_bias must be in [0, 1], got {eos_bias}")
        vocab = vocabulary if vocabulary is not None else Vocabulary.synthetic(vocab_size)
        super().__init__(vocab, f"hash(seed={seed},v={vocab.size},ctx={context_window},eos_bias={eos_bias})")
        self.seed = seed & _MASK64
        self.context_window = context_window
        self.eos_bias = eos_bias
        self._lanes = np.arange(1, vocab.size + 1, dtype=np.uint64)

    def _logits(self, prefix: tuple[int, ...]) -> Logits:
        ctx = prefix[-self.context_window:]
        h = _hash_tokens(self.seed, ctx)
        scores = _mix_vec(np.uint64(h) + self._lanes) / 2**64
        eos_coin = _u01(_mix(h ^ _EOS_SALT))
        scores[self._vocabulary.eos_id] = 2.0 if eos_coin < self.eos_bias else -1.0
        scores[self._vocabulary.pad_id] = -2.0
        return scores


class NGramLM(LanguageModel):
    """Count-based model with add-constant smoothing and back-off.

    ``counts[k]`` maps a (k-1)-token context to a per-token count vector.
    Scoring uses the longest context order with observed counts, falling
    back one order at a time down to the always-present unigram table, so
    an order-n model on an unseen context returns exactly the logits of
    the order-(n-1) model trained on the same corpus.
    """

    def __init__(
        self,
        vocabulary: Vocabulary,
        order: int,
        counts: dict[int, dict[tuple[int, ...], np.ndarray]],
        smoothing: float = 0.01,
        tokenizer_mode: str = "whitespace",
    ):
        if order < 1:
            raise InvalidConfigError(f"order must be >= 1, got {order}")
        if smoothing <= 0:
            raise InvalidConfigError(f"smoothing must be positive, got {smoothing}")
        super().__init__(vocabulary, f"ngram(order={order},v={vocabulary.size})")
        self.order = order
        self.smoothing = smoothing
        self.tokenizer_mode = tokenizer_mode
        self._counts = counts

    def _logits(self, prefix: tuple[int, ...]) -> Logits:
        for k in range(self.order, 0, -1):
            if k - 1 > len(prefix):
                continue
            ctx = prefix[len(prefix) - (k - 1):] if k > 1 else ()
            vec = self._counts[k].get(ctx)
            if vec is not None:
                return vec + self.smoothing
        raise ContractViolationError("count tables lack a unigram entry")  # pragma: no cover


class AgreementDraft(LanguageModel):
    """Draft model whose per-prefix argmax agreement with a target is dialable.

    At each prefix a hash coin over (seed, full prefix) decides whether the
    draft's argmax equals the target's. On disagreement the argmax is moved
    to a deterministically chosen other token (never PAD, and not EOS when
    avoidable), so agreement behaves like a reproducible Bernoulli process.
    """

    def __init__(self, target: LanguageModel, agreement: float, seed: int):
        if not 0.0 <= agreement <= 1.0:
            raise InvalidConfigError(f"agreement must be in [0, 1], got {agreement}")
        super().__init__(
            target.vocabulary,
            f"agreement(target={target.name},a={agreement},seed={seed})",
        )
        self.target = target
        self.agreement = agreement
        self.seed = seed & _MASK64

    def _logits(self, prefix: tuple[int, ...]) -> Logits:
        target_logits = self.target.score_next(prefix)
        coin = _u01(_hash_tokens(self.seed, prefix))
        if coin < self.agreement:
            return np.array(target_logits)
        vocab = self._vocabulary
        top = argmax_token(target_logits)
        blocked = {top, vocab.pad_id, vocab.eos_id}
        candidates = [i for i in range(vocab.size) if i not in blocked]
        if not candidates:
            candidates = [i for i in range(vocab.size) if i not in (top, vocab.pad_id)]
        pick = _mix(_hash_tokens(self.seed, prefix) ^ _ALT_SALT)
        alt = candidates[pick % len(candidates)]
        scores = np.array(target_logits)
        scores[alt] = float(target_logits.max()) + 1.0
        return scores


def _tokenize(text: str, mode: str) -> list[str]:
    if mode == "whitespace":
        return text.split()
    if mode == "byte":
        return [chr(b) for b in text.encode("utf-8")]
    raise InvalidConfigError(f"unknown tokenizer_mode {mode!r} (expected 'whitespace' or 'byte')")


def train_ngram(
    corpus_text: str,
    order: int,
    tokenizer_mode: str = "whitespace",
    smoothing: float = 0.01,
) -> NGramLM:
    """Build an ``NGramLM`` from raw text.

    The vocabulary is the sorted set of distinct corpus tokens plus the
    reserved EOS and PAD entries; count tables are built for every order
    from 1 up to ``order`` so back-off stays exact.
    """
    if order < 1:
        raise InvalidConfigError(f"order must be >= 1, got {order}")
    words = _tokenize(corpus_text, tokenizer_mode)
    if not words:
        raise InvalidInputError("corpus is empty after tokenization")
    vocab = Vocabulary.from_content(sorted(set(words)))
    ids = [vocab.id_of(w) for w in words]

    counts: dict[int, dict[tuple[int, ...], np.ndarray]] = {}
    for k in range(1, order + 1):
        table: dict[tuple[int, ...], np.ndarray] = {}
        for i in range(k - 1, len(ids)):
            ctx = tuple(ids[i - k + 1: i])
            vec = table.get(ctx)
            if vec is None:
                vec = np.zeros(vocab.size, dtype=np.float64)
                table[ctx] = vec
            vec[ids[i]] += 1.0
        counts[k] = table
    return NGramLM(vocab, order, counts, smoothing=smoothing, tokenizer_mode=tokenizer_mode)
