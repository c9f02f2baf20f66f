"""Training schedule: an initial uniform phase, then bootstrapping phases.

Each bootstrapping phase resets the statistics, runs a scoring pass that
evaluates every sample's reward exactly once (freezing the first-pass
scores and their mean/std for the phase), and then runs T policy-driven
training iterations.  The loop is inherently sequential: each selection
depends on all prior rewards.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bandit import (
    BanditState,
    PolicyConfig,
    initial_scores,
    population_stats,
    record_reward,
    reset_stats,
    select_ohem,
    select_rucb,
    select_ucb,
    select_uniform,
)
from .learner import LabeledSlice, ToyPixelClassifier, cross_entropy_reward, dice_score
from .rng import substream
from .testbed import SimulatedLearner, simulated_reward

POLICIES = ("uniform", "ohem", "ucb", "rucb")
FEATURE_DIM = 3


@dataclass
class IterationRecord:
    """One training iteration: phase 0 is the initial uniform phase, phases
    1..P are bootstrapping phases; t counts from 1 within a phase."""

    phase: int
    t: int
    sample_id: int
    reward: float
    alpha: float | None = None
    k: int | None = None

    def to_dict(self) -> dict:
        return {
            "phase": self.phase,
            "t": self.t,
            "sample_id": self.sample_id,
            "reward": self.reward,
            "alpha": self.alpha,
            "k": self.k,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        return cls(
            phase=int(d["phase"]),
            t=int(d["t"]),
            sample_id=int(d["sample_id"]),
            reward=float(d["reward"]),
            alpha=None if d.get("alpha") is None else float(d["alpha"]),
            k=None if d.get("k") is None else int(d["k"]),
        )


@dataclass
class PhasePlan:
    """Phase layout plus the policy that drives the bootstrapping phases.

    ``t_per_phase`` and ``num_boot_phases`` default to the values carried by
    the policy config when not given explicitly.
    """

    policy: str
    policy_config: PolicyConfig
    initial_iters: int = 2000
    num_boot_phases: int | None = None
    t_per_phase: int | None = None

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.initial_iters < 0:
            raise ValueError("initial_iters must be >= 0")
        if self.num_boot_phases is None:
            self.num_boot_phases = self.policy_config.num_phases
        if self.t_per_phase is None:
            self.t_per_phase = self.policy_config.t_per_phase
        if self.num_boot_phases < 0:
            raise ValueError("num_boot_phases must be >= 0")
        if self.t_per_phase < 1:
            raise ValueError("t_per_phase must be >= 1")

    @property
    def total_iterations(self) -> int:
        return self.initial_iters + self.num_boot_phases * self.t_per_phase


@dataclass
class SegmentationCorpus:
    """Training slices plus a clean held-out split for DSC evaluation."""

    train: list[LabeledSlice]
    heldout: list[LabeledSlice]
    num_classes: int
    learning_rate: float = 0.5


class ScriptedEnvironment:
    """Adapter giving the scheduler a train/evaluate view of a scripted
    corpus.  Training advances the per-sample visit count; evaluation does
    not (the scoring pass must not make samples easier)."""

    def __init__(self, learner: SimulatedLearner):
        self.learner = learner
        self.visits = np.zeros(learner.num_samples, dtype=np.int64)
        self.model = None

    @property
    def num_samples(self) -> int:
        return self.learner.num_samples

    @property
    def corrupted(self) -> np.ndarray:
        return self.learner.corrupted

    def evaluate(self, sample_id: int) -> float:
        return simulated_reward(self.learner, sample_id, int(self.visits[sample_id]))

    def train(self, sample_id: int) -> float:
        reward = self.evaluate(sample_id)
        self.visits[sample_id] += 1
        return reward


class SegmentationEnvironment:
    """Adapter pairing the toy pixel classifier with a slice corpus."""

    def __init__(self, corpus: SegmentationCorpus, model: ToyPixelClassifier):
        self.corpus = corpus
        self.model = model

    @property
    def num_samples(self) -> int:
        return len(self.corpus.train)

    @property
    def corrupted(self) -> np.ndarray:
        return np.array([sl.corrupted for sl in self.corpus.train])

    def evaluate(self, sample_id: int) -> float:
        sl = self.corpus.train[sample_id]
        return cross_entropy_reward(self.model.predict(sl), sl.labels)

    def train(self, sample_id: int) -> float:
        return self.model.train_step(self.corpus.train[sample_id])


@dataclass
class RngStreams:
    """The per-run selection streams, all derived from one root seed."""

    uniform: np.random.Generator
    alpha: np.random.Generator
    topk: np.random.Generator
    ohem: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        return cls(
            uniform=substream(seed, "uniform"),
            alpha=substream(seed, "alpha"),
            topk=substream(seed, "topk"),
            ohem=substream(seed, "ohem"),
        )


@dataclass
class RunResult:
    """Everything a report needs from one experiment run."""

    policy: str
    seed: int
    log: list[IterationRecord]
    selection_histogram: np.ndarray
    corrupted_share_per_phase: list[float | None]
    corrupted: np.ndarray
    phase_stats: list[tuple[float, float]]
    final_state: BanditState
    model: ToyPixelClassifier | None = None
    dsc_per_class: dict[int, list[float]] | None = None

    @property
    def total_iterations(self) -> int:
        return len(self.log)

    @property
    def mean_dsc(self) -> float | None:
        """Mean over organ classes of the per-class mean DSC, or None."""
        if not self.dsc_per_class:
            return None
        means = [float(np.mean(v)) for v in self.dsc_per_class.values()]
        return float(np.mean(means))


def run_initial_phase(env, iters: int, rng: np.random.Generator) -> list[IterationRecord]:
    """Uniform-selection training; no bandit statistics consulted."""
    if iters < 0:
        raise ValueError("iters must be >= 0")
    records = []
    for t in range(1, iters + 1):
        sample_id = select_uniform(env.num_samples, rng)
        reward = env.train(sample_id)
        records.append(IterationRecord(phase=0, t=t, sample_id=sample_id, reward=reward))
    return records


def run_scoring_pass(env, state: BanditState, beta: float) -> np.ndarray:
    """Evaluate every sample's reward once, in ascending id order, without
    touching the model; then freeze the first-pass scores and their
    mean/std.  Returns the frozen first-pass score vector."""
    if state.n != 0 or np.any(state.counts != 0):
        raise ValueError("run_scoring_pass requires freshly reset statistics")
    for sample_id in range(env.num_samples):
        record_reward(state, sample_id, env.evaluate(sample_id), beta=beta)
    q_initial = initial_scores(state, beta)
    state.mu, state.sigma = population_stats(q_initial)
    state.q = q_initial.copy()
    return q_initial


def run_boot_phase(
    env,
    state: BanditState,
    q_initial: np.ndarray,
    plan: PhasePlan,
    streams: RngStreams,
    phase_index: int,
) -> list[IterationRecord]:
    """T iterations of select, train, record, refresh."""
    cfg = plan.policy_config
    records = []
    for t in range(1, plan.t_per_phase + 1):
        alpha = None
        k = None
        if plan.policy == "uniform":
            sample_id = select_uniform(env.num_samples, streams.uniform)
        elif plan.policy == "ohem":
            sample_id = select_ohem(state, streams.ohem, cfg.ohem_pool)
        elif plan.policy == "ucb":
            sample_id = select_ucb(state)
        else:
            choice = select_rucb(state, q_initial, cfg, streams.topk, streams.alpha)
            sample_id, alpha, k = choice
        reward = env.train(sample_id)
        record_reward(state, sample_id, reward, beta=cfg.beta)
        records.append(
            IterationRecord(
                phase=phase_index,
                t=t,
                sample_id=sample_id,
                reward=reward,
                alpha=alpha,
                k=k,
            )
        )
    return records


def make_environment(corpus):
    if isinstance(corpus, SimulatedLearner):
        return ScriptedEnvironment(corpus)
    if isinstance(corpus, SegmentationCorpus):
        model = ToyPixelClassifier.zero_init(
            FEATURE_DIM, corpus.num_classes, corpus.learning_rate
        )
        return SegmentationEnvironment(corpus, model)
    raise TypeError(f"unsupported corpus type {type(corpus).__name__}")


def evaluate_dsc(
    model: ToyPixelClassifier, slices: list[LabeledSlice], num_classes: int
) -> dict[int, list[float]]:
    """Per-organ-class DSC, one value per slice (background excluded)."""
    per_class: dict[int, list[float]] = {c: [] for c in range(1, num_classes)}
    for sl in slices:
        pred = model.predict_labels(sl)
        for c in range(1, num_classes):
            per_class[c].append(dice_score(pred, sl.labels, c))
    return per_class


def run_experiment(plan: PhasePlan, corpus, seed: int | None = None) -> RunResult:
    """Full schedule: initial phase, then num_boot_phases repetitions of
    reset, scoring pass, boot phase; fully deterministic given the seed."""
    if seed is None:
        seed = plan.policy_config.seed
    env = make_environment(corpus)
    plan.policy_config.validate_for_corpus(env.num_samples)
    streams = RngStreams.from_seed(seed)
    state = BanditState.fresh(env.num_samples)

    log = run_initial_phase(env, plan.initial_iters, streams.uniform)
    phase_stats = []
    for phase in range(1, plan.num_boot_phases + 1):
        reset_stats(state)
        q_initial = run_scoring_pass(env, state, plan.policy_config.beta)
        phase_stats.append((state.mu, state.sigma))
        log.extend(run_boot_phase(env, state, q_initial, plan, streams, phase))

    corrupted = env.corrupted.copy()
    histogram = np.zeros(env.num_samples, dtype=np.int64)
    for rec in log:
        if rec.phase >= 1:
            histogram[rec.sample_id] += 1

    shares: list[float | None] = []
    for phase in range(plan.num_boot_phases + 1):
        ids = [rec.sample_id for rec in log if rec.phase == phase]
        shares.append(float(np.mean(corrupted[ids])) if ids else None)

    dsc = None
    model = getattr(env, "model", None)
    if isinstance(corpus, SegmentationCorpus):
        dsc = evaluate_dsc(model, corpus.heldout, corpus.num_classes)

    return RunResult(
        policy=plan.policy,
        seed=seed,
        log=log,
        selection_histogram=histogram,
        corrupted_share_per_phase=shares,
        corrupted=corrupted,
        phase_stats=phase_stats,
        final_state=state,
        model=model,
        dsc_per_class=dsc,
    )
