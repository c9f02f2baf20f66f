"""Relaxed-UCB sample selection for training loops, with baselines and a
reproducible desk-scale experiment harness."""

from .bandit import (
    BanditState,
    PolicyConfig,
    RucbChoice,
    SampleStats,
    classic_ucb_score,
    dynamic_k,
    initial_scores,
    normalize_reward,
    population_stats,
    record_reward,
    reset_stats,
    select_ohem,
    select_rucb,
    select_ucb,
    select_uniform,
    ucb_score,
)
from .config import ConfigError, ExperimentConfig, parse_config, serialize_config
from .learner import (
    LabeledSlice,
    ToyPixelClassifier,
    cross_entropy_reward,
    dice_score,
)
from .report import emit_selection_report, render_dsc_table
from .scheduler import (
    IterationRecord,
    PhasePlan,
    RunResult,
    SegmentationCorpus,
    run_boot_phase,
    run_experiment,
    run_initial_phase,
    run_scoring_pass,
)
from .testbed import (
    CorpusSpec,
    SimulatedLearner,
    generate_scripted_corpus,
    generate_segmentation_corpus,
    simulated_reward,
)

__version__ = "0.1.0"

__all__ = [
    "BanditState",
    "ConfigError",
    "CorpusSpec",
    "ExperimentConfig",
    "IterationRecord",
    "LabeledSlice",
    "PhasePlan",
    "PolicyConfig",
    "RucbChoice",
    "RunResult",
    "SampleStats",
    "SegmentationCorpus",
    "SimulatedLearner",
    "ToyPixelClassifier",
    "classic_ucb_score",
    "cross_entropy_reward",
    "dice_score",
    "dynamic_k",
    "emit_selection_report",
    "generate_scripted_corpus",
    "generate_segmentation_corpus",
    "initial_scores",
    "normalize_reward",
    "parse_config",
    "population_stats",
    "record_reward",
    "render_dsc_table",
    "reset_stats",
    "run_boot_phase",
    "run_experiment",
    "run_initial_phase",
    "run_scoring_pass",
    "select_ohem",
    "select_rucb",
    "select_ucb",
    "select_uniform",
    "serialize_config",
    "simulated_reward",
    "ucb_score",
]
