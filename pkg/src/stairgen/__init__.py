"""stairgen: greedy decoding engine with stairs-assisted generation."""

from .decode import (
    GenConfig,
    GenerationTrace,
    StairsBatch,
    ValidationResult,
    build_stairs_batch,
    draft_propose,
    greedy_generate,
    sequential_assisted_generate,
    stairs_generate,
    stairs_validate,
)
from .errors import ContractViolationError, InvalidConfigError, InvalidInputError
from .lm_core import (
    AgreementDraft,
    HashLM,
    LanguageModel,
    NGramLM,
    Vocabulary,
    argmax_token,
    train_ngram,
)
from .metrics import BleuScore, TimingStats, bleu, speedup_percent, timing_stats

__version__ = "0.1.0"
