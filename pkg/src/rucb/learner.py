"""Toy per-pixel classifier, its loss/reward, and the Dice overlap metric.

The learner is a linear-softmax classifier over per-pixel features.  It
stands in for a real segmentation network at desk scale: the reward of a
labeled slice is its mean per-pixel cross-entropy, and one training step is
one full-batch gradient-descent step on that slice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Floor applied to probabilities before logs. Only active for saturated
# wrong predictions; leaves reported values untouched at display precision.
PROB_FLOOR = 1e-12


@dataclass
class LabeledSlice:
    """Pixel grid with per-pixel features and class labels.

    ``pixels`` is (H, W, F) float features, ``labels`` is (H, W) integer
    class ids with 0 = background.  ``corrupted`` marks slices carrying an
    injected annotation error; it is ground-truth metadata that selection
    policies never see.
    """

    pixels: np.ndarray
    labels: np.ndarray
    corrupted: bool = False

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.pixels.ndim != 3:
            raise ValueError("pixels must be (H, W, F)")
        if self.labels.shape != self.pixels.shape[:2]:
            raise ValueError("labels grid must match the pixel grid")
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise ValueError("labels must be integers")
        if self.labels.min() < 0:
            raise ValueError("labels must be non-negative")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.pixels.shape[2]


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_reward(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean per-pixel cross-entropy of the true classes.

    ``(1 / (H*W)) * sum_j -log p[j, labels[j]]``; non-negative, zero only
    when every true-class probability is 1.  Probabilities are floored at
    ``PROB_FLOOR`` before the log.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.ndim != 3:
        raise ValueError("probs must be (H, W, C)")
    if labels.shape != probs.shape[:2]:
        raise ValueError("labels grid must match the probability grid")
    num_classes = probs.shape[2]
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError("labels out of range for the probability map")
    p_true = np.take_along_axis(probs, labels[..., None], axis=2)[..., 0]
    return float(-np.log(np.maximum(p_true, PROB_FLOOR)).mean())


@dataclass
class ToyPixelClassifier:
    """Linear-softmax pixel classifier: scores = pixels @ weights + bias."""

    weights: np.ndarray  # (F, C)
    bias: np.ndarray  # (C,)
    learning_rate: float = 0.5

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[1],):
            raise ValueError("weights must be (F, C) with bias (C,)")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")

    @classmethod
    def zero_init(
        cls, feature_dim: int, num_classes: int, learning_rate: float = 0.5
    ) -> "ToyPixelClassifier":
        return cls(
            weights=np.zeros((feature_dim, num_classes)),
            bias=np.zeros(num_classes),
            learning_rate=learning_rate,
        )

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def num_classes(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "ToyPixelClassifier":
        return ToyPixelClassifier(
            weights=self.weights.copy(),
            bias=self.bias.copy(),
            learning_rate=self.learning_rate,
        )

    def predict(self, sl: LabeledSlice) -> np.ndarray:
        """Per-pixel class probabilities, shape (H, W, C); rows sum to 1."""
        if sl.feature_dim != self.feature_dim:
            raise ValueError(
                f"slice has {sl.feature_dim} features, model expects {self.feature_dim}"
            )
        flat = sl.pixels.reshape(-1, self.feature_dim)
        scores = flat @ self.weights + self.bias
        return _softmax(scores).reshape(sl.height, sl.width, self.num_classes)

    def predict_labels(self, sl: LabeledSlice) -> np.ndarray:
        return np.argmax(self.predict(sl), axis=-1)

    def train_step(self, sl: LabeledSlice) -> float:
        """One gradient-descent step on this slice's cross-entropy.

        Returns the pre-update loss (the reward selection policies record).
        Raises FloatingPointError on a non-finite gradient, which signals a
        numerical blow-up from an oversized learning rate.
        """
        probs = self.predict(sl)
        reward = cross_entropy_reward(probs, sl.labels)
        num_pixels = sl.height * sl.width
        x = sl.pixels.reshape(num_pixels, self.feature_dim)
        g = probs.reshape(num_pixels, self.num_classes).copy()
        g[np.arange(num_pixels), sl.labels.reshape(-1)] -= 1.0
        g /= num_pixels
        grad_w = x.T @ g
        grad_b = g.sum(axis=0)
        if not (
            np.isfinite(reward)
            and np.all(np.isfinite(grad_w))
            and np.all(np.isfinite(grad_b))
        ):
            raise FloatingPointError(
                "non-finite gradient: numerical blow-up, lower the learning rate"
            )
        self.weights -= self.learning_rate * grad_w
        self.bias -= self.learning_rate * grad_b
        return reward


def dice_score(
    pred_labels: np.ndarray, true_labels: np.ndarray, class_id: int
) -> float:
    """Dice overlap 2|A&B| / (|A| + |B|) of one class's masks.

    Two empty masks score 1.0: an absent class correctly predicted absent.
    """
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape:
        raise ValueError("label grids must have identical shapes")
    a = pred == class_id
    b = true == class_id
    denom = int(a.sum()) + int(b.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int(np.logical_and(a, b).sum()) / denom
