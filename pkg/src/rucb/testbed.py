"""Deterministic synthetic corpora for policy experiments.

Two flavors:

* scripted corpora: a :class:`SimulatedLearner` whose per-sample reward is a
  base difficulty decaying multiplicatively with each training visit.  Lets
  policy dynamics be studied without any gradient training.
* segmentation corpora: toy labeled slices with rectangular/elliptical
  "organs" whose intensity tracks the class, plus injected annotation
  errors on a flagged fraction of slices (a region relabeled to a
  neighboring class, or part of an organ erased to background).

Generation is a pure function of (spec, seed): repeated calls are
bit-identical, and corruption draws from streams separate from slice
content, so a corrupted corpus shares its base slices with the clean corpus
of the same seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .learner import LabeledSlice
from .rng import substream

BACKGROUND_INTENSITY = 0.05
INTENSITY_NOISE = 0.02
ORGAN_PRESENCE = 0.85
# Intensity tolerance for "region mean matches its class prototype" checks.
GENERATOR_TOLERANCE = 0.05


@dataclass(frozen=True)
class CorpusSpec:
    """Parameters of a scripted corpus.

    Clean base difficulties are drawn uniformly from
    [difficulty_low, difficulty_high]; optionally a ``hard_fraction`` of
    them is redrawn from [hard_low, hard_high] to form a two-point mixture
    (an easy majority plus genuinely hard samples).  Corrupted samples get
    ``corruption_inflation`` times the largest clean difficulty so they
    dominate the loss tail, and by default their reward never decays
    (``corrupted_decay=1``): an annotation error is something training
    cannot fix.
    """

    num_samples: int
    difficulty_low: float = 0.05
    difficulty_high: float = 0.35
    hard_fraction: float = 0.0
    hard_low: float = 0.30
    hard_high: float = 0.35
    corruption_rate: float = 0.0
    corruption_inflation: float = 2.0
    decay: float = 0.97
    corrupted_decay: float = 1.0
    noise_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ValueError("corruption_rate must be in [0, 1]")
        if self.corruption_inflation <= 1.0:
            raise ValueError("corruption_inflation must be > 1")
        if not 0.0 <= self.difficulty_low <= self.difficulty_high:
            raise ValueError("need 0 <= difficulty_low <= difficulty_high")
        if not 0.0 <= self.hard_fraction <= 1.0:
            raise ValueError("hard_fraction must be in [0, 1]")
        if not 0.0 <= self.hard_low <= self.hard_high:
            raise ValueError("need 0 <= hard_low <= hard_high")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("decay must be in (0, 1]")
        if not 0.0 < self.corrupted_decay <= 1.0:
            raise ValueError("corrupted_decay must be in (0, 1]")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be non-negative")


@dataclass
class SimulatedLearner:
    """Closed-form learner: reward of sample i after v training visits is
    ``difficulties[i] * decay**v * (1 + noise)``, clamped at 0.

    Corrupted samples use ``corrupted_decay`` instead of ``decay``; with
    the default 1.0 their loss never improves, modeling annotation errors
    the learner cannot fit.
    """

    difficulties: np.ndarray
    decay: float
    noise_amplitude: float
    corrupted: np.ndarray
    seed: int
    corrupted_decay: float = 1.0

    @property
    def num_samples(self) -> int:
        return len(self.difficulties)


def generate_scripted_corpus(spec: CorpusSpec) -> SimulatedLearner:
    """Build a scripted corpus; exactly round(M * corruption_rate) samples
    are flagged and inflated."""
    m = spec.num_samples
    difficulties = substream(spec.seed, "difficulties").uniform(
        spec.difficulty_low, spec.difficulty_high, m
    )
    num_hard = int(round(m * spec.hard_fraction))
    if num_hard > 0:
        hard_rng = substream(spec.seed, "hard")
        hard_ids = hard_rng.choice(m, num_hard, replace=False)
        difficulties[hard_ids] = hard_rng.uniform(spec.hard_low, spec.hard_high, num_hard)
    corrupted = np.zeros(m, dtype=bool)
    num_corrupt = int(round(m * spec.corruption_rate))
    if num_corrupt > 0:
        ids = substream(spec.seed, "corruption").choice(m, num_corrupt, replace=False)
        corrupted[ids] = True
        clean_max = (
            float(difficulties[~corrupted].max())
            if num_corrupt < m
            else float(difficulties.max())
        )
        difficulties[corrupted] = spec.corruption_inflation * clean_max
    return SimulatedLearner(
        difficulties=difficulties,
        decay=spec.decay,
        noise_amplitude=spec.noise_amplitude,
        corrupted=corrupted,
        seed=spec.seed,
        corrupted_decay=spec.corrupted_decay,
    )


def simulated_reward(
    learner: SimulatedLearner, sample_id: int, visit_count: int
) -> float:
    """Reward of one sample after ``visit_count`` training visits.

    Pure given (sample_id, visit_count): the noise factor is seeded per
    pair, so replaying a visit yields the identical reward.
    """
    if not 0 <= sample_id < learner.num_samples:
        raise ValueError(f"sample_id {sample_id} out of range")
    if visit_count < 0:
        raise ValueError("visit_count must be >= 0")
    decay = (
        learner.corrupted_decay if learner.corrupted[sample_id] else learner.decay
    )
    value = float(learner.difficulties[sample_id]) * decay**visit_count
    if learner.noise_amplitude > 0:
        noise = substream(learner.seed, "noise", sample_id, visit_count).uniform(
            -1.0, 1.0
        )
        value *= 1.0 + learner.noise_amplitude * float(noise)
    return max(0.0, value)


def class_prototype(class_id: int, num_classes: int) -> float:
    """Mean intensity the generator assigns to a class."""
    if class_id == 0:
        return BACKGROUND_INTENSITY
    return 0.2 + 0.8 * class_id / (num_classes - 1)


def _organ_mask(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    span_h = int(rng.integers(3, max(4, height // 2) + 1))
    span_w = int(rng.integers(3, max(4, width // 2) + 1))
    top = int(rng.integers(0, height - span_h + 1))
    left = int(rng.integers(0, width - span_w + 1))
    if rng.random() < 0.5:
        mask = np.zeros((height, width), dtype=bool)
        mask[top : top + span_h, left : left + span_w] = True
        return mask
    cy = top + (span_h - 1) / 2.0
    cx = left + (span_w - 1) / 2.0
    ry = max(span_h / 2.0, 1.0)
    rx = max(span_w / 2.0, 1.0)
    yy, xx = np.ogrid[:height, :width]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _render_slice(
    rng: np.random.Generator, height: int, width: int, num_classes: int
) -> tuple[np.ndarray, np.ndarray]:
    intensity = BACKGROUND_INTENSITY + rng.normal(0.0, INTENSITY_NOISE, (height, width))
    labels = np.zeros((height, width), dtype=np.int64)
    present = [c for c in range(1, num_classes) if rng.random() < ORGAN_PRESENCE]
    if not present:
        present = [1 + int(rng.integers(num_classes - 1))]
    for c in present:
        mask = _organ_mask(rng, height, width)
        labels[mask] = c
        intensity[mask] = class_prototype(c, num_classes) + rng.normal(
            0.0, INTENSITY_NOISE, int(mask.sum())
        )
    return intensity, labels


def _corrupt_labels(
    labels: np.ndarray, rng: np.random.Generator, num_classes: int
) -> str:
    """Apply one annotation error in place; returns the mode used."""
    organs = sorted(int(c) for c in np.unique(labels) if c > 0)
    target_class = organs[int(rng.integers(len(organs)))]
    # With a single organ class there is no neighboring class to include.
    inclusion = num_classes > 2 and rng.random() < 0.5
    if inclusion:
        wrong = target_class + 1 if target_class + 1 < num_classes else target_class - 1
        labels[labels == target_class] = wrong
        return "inclusion"
    rows, cols = np.nonzero(labels == target_class)
    axis = cols if rng.random() < 0.5 else rows
    order = np.argsort(axis, kind="stable")
    fraction = rng.uniform(0.4, 0.7)
    erase = order[: max(1, int(round(fraction * len(rows))))]
    labels[rows[erase], cols[erase]] = 0
    return "missing_part"


def _position_features(intensity: np.ndarray) -> np.ndarray:
    height, width = intensity.shape
    row = np.repeat(np.linspace(0.0, 1.0, height)[:, None], width, axis=1)
    col = np.repeat(np.linspace(0.0, 1.0, width)[None, :], height, axis=0)
    return np.stack([intensity, row, col], axis=-1)


def generate_segmentation_corpus(
    num_slices: int,
    grid: tuple[int, int],
    num_classes: int,
    corruption_rate: float,
    seed: int,
) -> list[LabeledSlice]:
    """Toy labeled slices with randomly placed organs and injected errors.

    Per-pixel features are (intensity, normalized row, normalized column),
    so a linear-softmax learner can separate the synthetic organs.
    Corruption edits only the label map, never the intensities, which keeps
    corrupted slices' losses inflated for any learner that fits the clean
    mapping.
    """
    height, width = grid
    if height < 4 or width < 4:
        raise ValueError("grid must be at least 4x4")
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2 (background + >= 1 organ)")
    if not 0.0 <= corruption_rate <= 1.0:
        raise ValueError("corruption_rate must be in [0, 1]")
    if num_slices < 1:
        raise ValueError("num_slices must be >= 1")

    corrupt_ids: set[int] = set()
    num_corrupt = int(round(num_slices * corruption_rate))
    if num_corrupt > 0:
        chosen = substream(seed, "corruption").choice(
            num_slices, num_corrupt, replace=False
        )
        corrupt_ids = {int(i) for i in chosen}

    slices = []
    for i in range(num_slices):
        intensity, labels = _render_slice(
            substream(seed, "slice", i), height, width, num_classes
        )
        corrupted = i in corrupt_ids
        if corrupted:
            _corrupt_labels(labels, substream(seed, "corrupt", i), num_classes)
        slices.append(
            LabeledSlice(
                pixels=_position_features(intensity),
                labels=labels,
                corrupted=corrupted,
            )
        )
    return slices
