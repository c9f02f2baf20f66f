"""Experiment configuration: a versioned JSON document, fully validated
before any run starts.

Layout (defaults shown where they exist)::

    {
      "schema_version": 1,
      "corpus": {"kind": "scripted" | "segmentation", ...},
      "plan": {"initial_iters": 2000, "num_boot_phases": 3, "t_per_phase": 2000},
      "policy": {"name": "rucb", "variant": "dynamic_alpha", "beta": 2.0,
                 "a": 3.0, "fixed_alpha": null, "fixed_k": null, "ohem_pool": 8},
      "learner": {"learning_rate": 0.5},          # segmentation only
      "seeds": [0],
      "output_dir": null
    }

Unknown keys are rejected; every validation error names the offending key.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .bandit import PolicyConfig
from .rng import derive_seed
from .scheduler import POLICIES, PhasePlan, SegmentationCorpus
from .testbed import (
    CorpusSpec,
    SimulatedLearner,
    generate_scripted_corpus,
    generate_segmentation_corpus,
)

SCHEMA_VERSION = 1
CORPUS_KINDS = ("scripted", "segmentation")


class ConfigError(ValueError):
    """Carries the full list of field-level validation errors."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ScriptedSettings:
    num_samples: int = 200
    difficulty_low: float = 0.05
    difficulty_high: float = 0.35
    hard_fraction: float = 0.0
    hard_low: float = 0.30
    hard_high: float = 0.35
    corruption_rate: float = 0.05
    corruption_inflation: float = 2.0
    decay: float = 0.97
    corrupted_decay: float = 1.0
    noise_amplitude: float = 0.0


@dataclass(frozen=True)
class SegmentationSettings:
    num_samples: int = 200
    height: int = 16
    width: int = 16
    num_classes: int = 5
    corruption_rate: float = 0.1
    heldout_size: int = 32
    learning_rate: float = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_kind: str
    corpus: ScriptedSettings | SegmentationSettings
    initial_iters: int
    num_boot_phases: int
    t_per_phase: int
    policy: str
    variant: str
    beta: float
    a: float
    fixed_alpha: float | None
    fixed_k: int | None
    ohem_pool: int
    seeds: tuple[int, ...]
    output_dir: str | None

    def make_policy_config(self, seed: int) -> PolicyConfig:
        return PolicyConfig(
            beta=self.beta,
            a=self.a,
            variant=self.variant,
            fixed_alpha=self.fixed_alpha,
            fixed_k=self.fixed_k,
            ohem_pool=self.ohem_pool,
            t_per_phase=self.t_per_phase,
            num_phases=self.num_boot_phases if self.num_boot_phases > 0 else 3,
            seed=seed,
        )

    def make_plan(self, seed: int, policy: str | None = None) -> PhasePlan:
        return PhasePlan(
            policy=policy or self.policy,
            policy_config=self.make_policy_config(seed),
            initial_iters=self.initial_iters,
            num_boot_phases=self.num_boot_phases,
            t_per_phase=self.t_per_phase,
        )

    def build_corpus(self, seed: int):
        """Corpus for one run; seeded independently of the selection streams."""
        if self.corpus_kind == "scripted":
            s: ScriptedSettings = self.corpus
            return generate_scripted_corpus(
                CorpusSpec(
                    num_samples=s.num_samples,
                    difficulty_low=s.difficulty_low,
                    difficulty_high=s.difficulty_high,
                    hard_fraction=s.hard_fraction,
                    hard_low=s.hard_low,
                    hard_high=s.hard_high,
                    corruption_rate=s.corruption_rate,
                    corruption_inflation=s.corruption_inflation,
                    decay=s.decay,
                    corrupted_decay=s.corrupted_decay,
                    noise_amplitude=s.noise_amplitude,
                    seed=derive_seed(seed, "corpus"),
                )
            )
        g: SegmentationSettings = self.corpus
        grid = (g.height, g.width)
        return SegmentationCorpus(
            train=generate_segmentation_corpus(
                g.num_samples, grid, g.num_classes, g.corruption_rate,
                derive_seed(seed, "corpus"),
            ),
            heldout=generate_segmentation_corpus(
                g.heldout_size, grid, g.num_classes, 0.0,
                derive_seed(seed, "heldout"),
            ),
            num_classes=g.num_classes,
            learning_rate=g.learning_rate,
        )

    def to_dict(self) -> dict:
        corpus = {"kind": self.corpus_kind}
        corpus.update(dataclasses.asdict(self.corpus))
        learner = {}
        if self.corpus_kind == "segmentation":
            learner = {"learner": {"learning_rate": corpus.pop("learning_rate")}}
        return {
            "schema_version": SCHEMA_VERSION,
            "corpus": corpus,
            "plan": {
                "initial_iters": self.initial_iters,
                "num_boot_phases": self.num_boot_phases,
                "t_per_phase": self.t_per_phase,
            },
            "policy": {
                "name": self.policy,
                "variant": self.variant,
                "beta": self.beta,
                "a": self.a,
                "fixed_alpha": self.fixed_alpha,
                "fixed_k": self.fixed_k,
                "ohem_pool": self.ohem_pool,
            },
            **learner,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
        }


class _Checker:
    """Accumulates key-named errors while pulling typed values out of the
    raw document."""

    def __init__(self) -> None:
        self.errors: list[str] = []

    def fail(self, key: str, message: str) -> None:
        self.errors.append(f"{key}: {message}")

    def section(self, doc: dict, key: str, allowed: set[str]) -> dict:
        sec = doc.get(key, {})
        if not isinstance(sec, dict):
            self.fail(key, "must be an object")
            return {}
        for unknown in sorted(set(sec) - allowed):
            self.fail(f"{key}.{unknown}", "unknown key")
        return sec

    def number(self, sec: dict, key: str, default, *, integer=False, optional=False):
        value = sec.get(key.split(".", 1)[1] if "." in key else key, default)
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, "must be a number")
            return default
        if integer and int(value) != value:
            self.fail(key, "must be an integer")
            return default
        return int(value) if integer else float(value)


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a raw document; raises ConfigError listing every problem."""
    if not isinstance(doc, dict):
        raise ConfigError(["config: top-level document must be an object"])
    c = _Checker()

    allowed_top = {"schema_version", "corpus", "plan", "policy", "learner", "seeds", "output_dir"}
    for unknown in sorted(set(doc) - allowed_top):
        c.fail(unknown, "unknown key")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        c.fail("schema_version", f"unsupported version {version!r}")

    corpus_sec = doc.get("corpus")
    if not isinstance(corpus_sec, dict):
        c.fail("corpus", "required section is missing or not an object")
        corpus_sec = {"kind": "scripted"}
    kind = corpus_sec.get("kind")
    if kind not in CORPUS_KINDS:
        c.fail("corpus.kind", f"must be one of {CORPUS_KINDS}, got {kind!r}")
        kind = "scripted"

    if kind == "scripted":
        allowed = {"kind", "num_samples", "difficulty_low", "difficulty_high",
                   "hard_fraction", "hard_low", "hard_high", "corruption_rate",
                   "corruption_inflation", "decay", "corrupted_decay",
                   "noise_amplitude"}
    else:
        allowed = {"kind", "num_samples", "height", "width", "num_classes",
                   "corruption_rate", "heldout_size"}
    for unknown in sorted(set(corpus_sec) - allowed):
        c.fail(f"corpus.{unknown}", "unknown key")

    learner_sec = c.section(doc, "learner", {"learning_rate"})
    if learner_sec and kind != "segmentation":
        c.fail("learner", "only valid for segmentation corpora")
    learning_rate = c.number(
        {"learning_rate": learner_sec.get("learning_rate", 0.5)},
        "learner.learning_rate", 0.5,
    )

    num_samples = c.number(corpus_sec, "corpus.num_samples", 200, integer=True)
    corruption_rate = c.number(corpus_sec, "corpus.corruption_rate",
                               0.05 if kind == "scripted" else 0.1)
    if num_samples < 1:
        c.fail("corpus.num_samples", "must be >= 1")
    if not 0.0 <= corruption_rate <= 1.0:
        c.fail("corpus.corruption_rate", "must be in [0, 1]")

    corpus: ScriptedSettings | SegmentationSettings
    if kind == "scripted":
        low = c.number(corpus_sec, "corpus.difficulty_low", 0.05)
        high = c.number(corpus_sec, "corpus.difficulty_high", 0.35)
        inflation = c.number(corpus_sec, "corpus.corruption_inflation", 2.0)
        decay = c.number(corpus_sec, "corpus.decay", 0.97)
        noise = c.number(corpus_sec, "corpus.noise_amplitude", 0.0)
        if not 0.0 <= low <= high:
            c.fail("corpus.difficulty_low", "need 0 <= difficulty_low <= difficulty_high")
        if inflation <= 1.0:
            c.fail("corpus.corruption_inflation", "must be > 1")
        if not 0.0 < decay <= 1.0:
            c.fail("corpus.decay", "must be in (0, 1]")
        if noise < 0:
            c.fail("corpus.noise_amplitude", "must be >= 0")
        corpus = ScriptedSettings(num_samples, low, high, corruption_rate,
                                  inflation, decay, noise)
    else:
        height = c.number(corpus_sec, "corpus.height", 16, integer=True)
        width = c.number(corpus_sec, "corpus.width", 16, integer=True)
        num_classes = c.number(corpus_sec, "corpus.num_classes", 5, integer=True)
        heldout = c.number(corpus_sec, "corpus.heldout_size", 32, integer=True)
        if height < 4 or width < 4:
            c.fail("corpus.height", "grid must be at least 4x4")
        if num_classes < 2:
            c.fail("corpus.num_classes", "must be >= 2")
        if heldout < 1:
            c.fail("corpus.heldout_size", "must be >= 1")
        if learning_rate <= 0:
            c.fail("learner.learning_rate", "must be > 0")
        corpus = SegmentationSettings(num_samples, height, width, num_classes,
                                      corruption_rate, heldout, learning_rate)

    plan_sec = c.section(doc, "plan", {"initial_iters", "num_boot_phases", "t_per_phase"})
    initial_iters = c.number(plan_sec, "plan.initial_iters", 2000, integer=True)
    num_boot = c.number(plan_sec, "plan.num_boot_phases", 3, integer=True)
    t_per_phase = c.number(plan_sec, "plan.t_per_phase", 2000, integer=True)
    if initial_iters < 0:
        c.fail("plan.initial_iters", "must be >= 0")
    if num_boot < 0:
        c.fail("plan.num_boot_phases", "must be >= 0")
    if t_per_phase < 1:
        c.fail("plan.t_per_phase", "must be >= 1")

    policy_sec = c.section(
        doc, "policy",
        {"name", "variant", "beta", "a", "fixed_alpha", "fixed_k", "ohem_pool"},
    )
    policy = policy_sec.get("name", "rucb")
    if policy not in POLICIES:
        c.fail("policy.name", f"must be one of {POLICIES}, got {policy!r}")
        policy = "rucb"
    variant = policy_sec.get("variant", "dynamic_alpha")
    if variant not in ("dynamic_alpha", "fixed_alpha", "fixed_k"):
        c.fail("policy.variant", f"unknown variant {variant!r}")
        variant = "dynamic_alpha"
    beta = c.number(policy_sec, "policy.beta", 2.0)
    a = c.number(policy_sec, "policy.a", 3.0)
    fixed_alpha = c.number(policy_sec, "policy.fixed_alpha", None, optional=True)
    fixed_k = c.number(policy_sec, "policy.fixed_k", None, integer=True, optional=True)
    ohem_pool = c.number(policy_sec, "policy.ohem_pool", 8, integer=True)
    if beta <= 0:
        c.fail("policy.beta", "must be > 0")
    if a < 0:
        c.fail("policy.a", "must be >= 0")
    if ohem_pool < 1:
        c.fail("policy.ohem_pool", "must be >= 1")
    if variant == "fixed_alpha" and (fixed_alpha is None or fixed_alpha < 0):
        c.fail("policy.fixed_alpha", "required and >= 0 for the fixed_alpha variant")
    if variant == "fixed_k":
        if fixed_k is None or fixed_k < 1:
            c.fail("policy.fixed_k", "required and >= 1 for the fixed_k variant")
        elif fixed_k > num_samples:
            c.fail("policy.fixed_k", f"must be <= corpus size {num_samples}")

    seeds_raw = doc.get("seeds", [0])
    seeds: tuple[int, ...] = (0,)
    if (not isinstance(seeds_raw, list) or not seeds_raw
            or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0
                       for s in seeds_raw)):
        c.fail("seeds", "must be a non-empty list of non-negative integers")
    else:
        seeds = tuple(seeds_raw)

    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        c.fail("output_dir", "must be a string or null")

    if c.errors:
        raise ConfigError(c.errors)

    return ExperimentConfig(
        corpus_kind=kind,
        corpus=corpus,
        initial_iters=initial_iters,
        num_boot_phases=num_boot,
        t_per_phase=t_per_phase,
        policy=policy,
        variant=variant,
        beta=beta,
        a=a,
        fixed_alpha=fixed_alpha,
        fixed_k=fixed_k,
        ohem_pool=ohem_pool,
        seeds=seeds,
        output_dir=output_dir,
    )


def parse_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config: file not found: {path}"])
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: malformed JSON: {exc}"]) from exc
    return config_from_dict(doc)


def serialize_config(config: ExperimentConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
