"""Harness configuration: a small INI file with model, plan, and output sections.

Every model referenced by a command is constructed at load time, so bad
parameters or a missing corpus fail before any run starts. Paths inside a
config file resolve relative to the file itself; when no file is given the
packaged default configuration is used (override with the
``STAIRGEN_CONFIG`` environment variable or ``--config``).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .bench import METHODS, ExperimentPlan, LatencyModel
from .decode import GenConfig
from .errors import InvalidConfigError
from .lm_core import AgreementDraft, HashLM, LanguageModel, NGramLM, train_ngram

ENV_CONFIG = "STAIRGEN_CONFIG"

DEFAULT_CONFIG_RESOURCE = "default.cfg"


@dataclass
class CliConfig:
    target: LanguageModel
    draft: LanguageModel | None
    mode: str
    methods: list[str]
    batch_sizes: list[int]
    sweep_repetitions: int
    compare_repetitions: int
    compare_batch_size: int | None  # None means: use the sweep winner
    warmup_runs: int
    max_new_tokens: int
    stop_on_eos: bool
    prompts: list[list[int]]
    latency: LatencyModel
    seed: int
    out_dir: Path
    formats: list[str]
    figures: bool

    def gen_config(self, batch_size: int = 1) -> GenConfig:
        return GenConfig(
            max_new_tokens=self.max_new_tokens,
            batch_size=batch_size,
            stop_on_eos=self.stop_on_eos,
        )

    def plan(self, *, methods: list[str], batch_sizes: list[int], repetitions: int) -> ExperimentPlan:
        return ExperimentPlan(
            mode=self.mode,
            methods=methods,
            batch_sizes=batch_sizes,
            repetitions=repetitions,
            warmup_runs=self.warmup_runs,
            prompts=self.prompts,
            target=self.target,
            draft=self.draft,
            gen=self.gen_config(),
            latency=self.latency,
            seed=self.seed,
        )

    def join_tokens(self, tokens: list[str]) -> str:
        mode = getattr(self.target, "tokenizer_mode", "whitespace")
        return ("" if mode == "byte" else " ").join(tokens)


def _read_config_text(path: str | None) -> tuple[str, Path | None, str]:
    """Returns (text, base_dir for relative paths, description)."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise InvalidConfigError(f"config file not found: {p}")
        return p.read_text(encoding="utf-8"), p.parent, str(p)
    data = resources.files("stairgen").joinpath("data")
    return (
        data.joinpath(DEFAULT_CONFIG_RESOURCE).read_text(encoding="utf-8"),
        None,
        f"packaged:{DEFAULT_CONFIG_RESOURCE}",
    )


def _read_corpus(corpus: str, base_dir: Path | None) -> str:
    p = Path(corpus)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    if p.is_file():
        return p.read_text(encoding="utf-8")
    if base_dir is None:
        # Packaged default configs reference corpora shipped next to them.
        res = resources.files("stairgen").joinpath("data").joinpath(corpus)
        if res.is_file():
            return res.read_text(encoding="utf-8")
    raise InvalidConfigError(f"corpus file not found: {corpus}")


def _build_model(
    section: configparser.SectionProxy,
    base_dir: Path | None,
    target: LanguageModel | None,
) -> LanguageModel:
    kind = section.get("kind", "").strip()
    if kind == "hash":
        return HashLM(
            seed=section.getint("seed", 0),
            vocab_size=section.getint("vocab_size", 32),
            context_window=section.getint("context_window", 4),
            eos_bias=section.getfloat("eos_bias", 0.0),
        )
    if kind == "ngram":
        corpus = section.get("corpus")
        if not corpus:
            raise InvalidConfigError("ngram model requires a 'corpus' path")
        return train_ngram(
            _read_corpus(corpus, base_dir),
            order=section.getint("order", 3),
            tokenizer_mode=section.get("tokenizer", "whitespace"),
        )
    if kind == "agreement":
        if target is None:
            raise InvalidConfigError("agreement draft requires a target model")
        return AgreementDraft(
            target=target,
            agreement=section.getfloat("agreement", 0.9),
            seed=section.getint("seed", 0),
        )
    if kind == "same":
        if target is None:
            raise InvalidConfigError("draft kind 'same' requires a target model")
        return target
    raise InvalidConfigError(f"unknown model kind {kind!r} (expected hash, ngram, agreement, or same)")


def _parse_int_list(raw: str, what: str) -> list[int]:
    items = [s for s in (part.strip() for part in raw.split(",")) if s]
    try:
        return [int(s) for s in items]
    except ValueError as exc:
        raise InvalidConfigError(f"bad {what} entry in {raw!r}") from exc


def _parse_prompts(raw: str, target: LanguageModel) -> list[list[int]]:
    prompts = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if isinstance(target, NGramLM):
            mode = target.tokenizer_mode
            words = chunk.split() if mode == "whitespace" else [chr(b) for b in chunk.encode("utf-8")]
            prompts.append([target.vocabulary.id_of(w) for w in words])
        else:
            prompts.append(_parse_int_list(chunk, "prompt token id"))
    if not prompts:
        raise InvalidConfigError("at least one prompt is required")
    return prompts


def load_config(
    path: str | None = None,
    *,
    seed: int | None = None,
    mode: str | None = None,
    out_dir: str | None = None,
    formats: list[str] | None = None,
) -> CliConfig:
    """Parse and validate a config file, applying CLI overrides."""
    text, base_dir, desc = _read_config_text(path)
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=desc)
    except configparser.Error as exc:
        raise InvalidConfigError(f"cannot parse config {desc}: {exc}") from exc

    for required in ("target", "plan"):
        if required not in parser:
            raise InvalidConfigError(f"config {desc} is missing the [{required}] section")

    target = _build_model(parser["target"], base_dir, None)
    draft = _build_model(parser["draft"], base_dir, target) if "draft" in parser else None

    plan = parser["plan"]
    methods_raw = plan.get("methods", "original,sequential_assisted,stairs")
    methods = [m.strip() for m in methods_raw.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise InvalidConfigError(f"unknown method {m!r} in config (expected one of {METHODS})")

    cfg_mode = mode if mode is not None else plan.get("mode", "simulated")
    compare_b_raw = plan.get("compare_batch_size", "auto").strip()
    compare_b = None if compare_b_raw == "auto" else int(compare_b_raw)

    lat = parser["latency"] if "latency" in parser else {}
    latency = LatencyModel(
        target_base=float(lat.get("target_base", 0.04)),
        target_per_row=float(lat.get("target_per_row", 0.004)),
        draft_per_call=float(lat.get("draft_per_call", 0.0224)),
    )

    output = parser["output"] if "output" in parser else {}
    fmt_raw = ",".join(formats) if formats is not None else output.get("formats", "csv,json,md")
    fmt_list = [f.strip() for f in fmt_raw.split(",") if f.strip()]

    return CliConfig(
        target=target,
        draft=draft,
        mode=cfg_mode,
        methods=methods,
        batch_sizes=_parse_int_list(plan.get("batch_sizes", "2,3,4,5,6,7,8,9,10"), "batch size"),
        sweep_repetitions=plan.getint("sweep_repetitions", 10),
        compare_repetitions=plan.getint("compare_repetitions", 100),
        compare_batch_size=compare_b,
        warmup_runs=plan.getint("warmup_runs", 1),
        max_new_tokens=plan.getint("max_new_tokens", 600),
        stop_on_eos=plan.getboolean("stop_on_eos", True),
        prompts=_parse_prompts(plan.get("prompts", "1,2,3,4"), target),
        latency=latency,
        seed=seed if seed is not None else plan.getint("seed", 0),
        out_dir=Path(out_dir if out_dir is not None else output.get("dir", "stairgen-reports")),
        formats=fmt_list,
        figures=output.getboolean("figures", True) if hasattr(output, "getboolean") else True,
    )
