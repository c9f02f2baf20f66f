"""Scoring formulas and selection policies for loss-driven sample scheduling.

Each training sample is treated as a bandit arm whose reward is the training
loss observed when the sample is visited: hard samples earn large average
rewards, rarely visited samples earn large exploration bonuses.  Four
policies are provided on top of the shared statistics:

* ``select_uniform`` ignores the statistics entirely.
* ``select_ohem`` draws uniformly among the samples with the largest average
  reward (hardest-first, no exploration term).
* ``select_ucb`` greedily takes the argmax of the combined score.
* ``select_rucb`` relaxes UCB: draw a threshold multiplier alpha, count how
  many of the frozen first-pass scores exceed ``mu + alpha * sigma``, and
  draw uniformly among that many of the currently highest-scoring samples.

Average rewards are normalized to ``[0, beta]`` around the corpus mean before
entering a score, so the exploitation term stays commensurate with the
exploration bonus ``sqrt(2 ln n / n_i)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

DEFAULT_BETA = 2.0
DEFAULT_ALPHA_UPPER = 3.0
DEFAULT_OHEM_POOL = 8

VARIANT_DYNAMIC_ALPHA = "dynamic_alpha"
VARIANT_FIXED_ALPHA = "fixed_alpha"
VARIANT_FIXED_K = "fixed_k"
VARIANTS = (VARIANT_DYNAMIC_ALPHA, VARIANT_FIXED_ALPHA, VARIANT_FIXED_K)


@dataclass(frozen=True)
class SampleStats:
    """Per-sample arm record: visit count and cumulative/average reward."""

    sample_id: int
    n_i: int
    reward_sum: float

    @property
    def j_bar(self) -> float:
        """Average reward; 0 for a never-visited sample."""
        return self.reward_sum / self.n_i if self.n_i > 0 else 0.0


@dataclass(frozen=True)
class PolicyConfig:
    """Knobs shared by the selection policies.

    ``beta`` caps the normalized exploitation score, ``a`` is the upper end
    of the uniform range the RUCB threshold multiplier is drawn from.  The
    variant selects how RUCB sizes its candidate pool: redraw alpha each
    iteration (``dynamic_alpha``), keep it fixed (``fixed_alpha``), or pin
    the pool size outright (``fixed_k``).
    """

    beta: float = DEFAULT_BETA
    a: float = DEFAULT_ALPHA_UPPER
    variant: str = VARIANT_DYNAMIC_ALPHA
    fixed_alpha: float | None = None
    fixed_k: int | None = None
    ohem_pool: int = DEFAULT_OHEM_POOL
    t_per_phase: int = 2000
    num_phases: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.a < 0:
            raise ValueError(f"a must be non-negative, got {self.a}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == VARIANT_FIXED_ALPHA:
            if self.fixed_alpha is None or self.fixed_alpha < 0:
                raise ValueError("fixed_alpha variant needs fixed_alpha >= 0")
        if self.variant == VARIANT_FIXED_K:
            if self.fixed_k is None or self.fixed_k < 1:
                raise ValueError("fixed_k variant needs fixed_k >= 1")
        if self.ohem_pool < 1:
            raise ValueError("ohem_pool must be >= 1")
        if self.t_per_phase < 1:
            raise ValueError("t_per_phase must be >= 1")
        if self.num_phases < 0:
            raise ValueError("num_phases must be >= 0")

    def validate_for_corpus(self, num_samples: int) -> None:
        """Checks that depend on the corpus size (fixed_k <= M)."""
        if self.variant == VARIANT_FIXED_K and self.fixed_k > num_samples:
            raise ValueError(
                f"fixed_k={self.fixed_k} exceeds corpus size {num_samples}"
            )


@dataclass
class BanditState:
    """All per-sample statistics plus the frozen phase statistics.

    ``counts``/``reward_sums``/``j_bar`` hold the per-sample records,
    ``n`` the total number of selections, and ``q`` the live scores.
    ``mu``/``sigma`` are frozen at a phase boundary (after a scoring pass)
    and are ``None`` until then.  Unvisited samples carry ``q = +inf``.
    """

    counts: np.ndarray
    reward_sums: np.ndarray
    j_bar: np.ndarray
    n: int
    mu: float | None
    sigma: float | None
    q: np.ndarray

    @classmethod
    def fresh(cls, num_samples: int) -> "BanditState":
        if num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        return cls(
            counts=np.zeros(num_samples, dtype=np.int64),
            reward_sums=np.zeros(num_samples, dtype=np.float64),
            j_bar=np.zeros(num_samples, dtype=np.float64),
            n=0,
            mu=None,
            sigma=None,
            q=np.full(num_samples, np.inf, dtype=np.float64),
        )

    @property
    def num_samples(self) -> int:
        return len(self.counts)

    def stat(self, sample_id: int) -> SampleStats:
        return SampleStats(
            sample_id=sample_id,
            n_i=int(self.counts[sample_id]),
            reward_sum=float(self.reward_sums[sample_id]),
        )

    @property
    def stats(self) -> tuple[SampleStats, ...]:
        return tuple(self.stat(i) for i in range(self.num_samples))

    def copy(self) -> "BanditState":
        """Independent snapshot, safe to hand to another thread."""
        return BanditState(
            counts=self.counts.copy(),
            reward_sums=self.reward_sums.copy(),
            j_bar=self.j_bar.copy(),
            n=self.n,
            mu=self.mu,
            sigma=self.sigma,
            q=self.q.copy(),
        )

    def equals(self, other: "BanditState") -> bool:
        return (
            self.n == other.n
            and self.mu == other.mu
            and self.sigma == other.sigma
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.reward_sums, other.reward_sums)
            and np.array_equal(self.j_bar, other.j_bar)
            and np.array_equal(self.q, other.q)
        )


class RucbChoice(NamedTuple):
    """One RUCB decision: the chosen sample plus the alpha draw and pool
    size K that produced it (``alpha`` is None for the fixed_k variant)."""

    sample_id: int
    alpha: float | None
    k: int


def classic_ucb_score(x_bar: float, n: int, n_k: int) -> float:
    """Plain UCB1 score: average reward plus sqrt(2 ln n / n_k)."""
    if n_k < 1:
        raise ValueError(f"n_k must be >= 1, got {n_k}")
    if n < n_k:
        raise ValueError(f"n must be >= n_k, got n={n}, n_k={n_k}")
    return x_bar + math.sqrt(2.0 * math.log(n) / n_k)


def normalize_reward(
    j_bar_i: float, j_bar_all: Sequence[float], beta: float = DEFAULT_BETA
) -> float:
    """Normalize an average reward to [0, beta] around the corpus mean.

    Returns ``min(beta, (beta / 2) * j_bar_i / mean(j_bar_all))``.  A corpus
    whose rewards are all zero normalizes to 0 for every sample (the
    degenerate convention that leaves selection exploration-only).
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    values = np.asarray(j_bar_all, dtype=np.float64)
    if values.size < 1:
        raise ValueError("j_bar_all must hold at least one value")
    if j_bar_i < 0 or np.any(values < 0):
        raise ValueError("average rewards must be non-negative")
    mean = float(values.mean())
    if mean == 0.0:
        return 0.0
    return min(beta, (beta / 2.0) * j_bar_i / mean)


def ucb_score(j_tilde: float, n: int, n_i: int) -> float:
    """Score of one sample: normalized reward plus sqrt(2 ln n / n_i)."""
    if n_i < 1:
        raise ValueError(f"n_i must be >= 1, got {n_i}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return j_tilde + math.sqrt(2.0 * math.log(n) / n_i)


def initial_scores(state: BanditState, beta: float = DEFAULT_BETA) -> np.ndarray:
    """First-pass scores after every sample was visited exactly once.

    With n = M and every n_i = 1 the exploration bonus is the constant
    ``sqrt(2 ln M)``, so score differences equal normalized-reward
    differences.
    """
    if np.any(state.counts != 1):
        raise ValueError("initial_scores requires every sample visited exactly once")
    m = state.num_samples
    return _normalized_vector(state.j_bar, beta) + math.sqrt(2.0 * math.log(m))


def population_stats(q: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation (divisor M) of the scores."""
    values = np.asarray(q, dtype=np.float64)
    if values.size < 1:
        raise ValueError("q must hold at least one value")
    return float(values.mean()), float(values.std())


def dynamic_k(
    q_initial: Sequence[float], mu: float, sigma: float, alpha: float
) -> int:
    """Number of frozen first-pass scores strictly above mu + alpha * sigma.

    Counted against the frozen scores only, never the live ones.  Clamped
    below at 1 so a threshold above every score degenerates to the plain
    argmax instead of an empty pool.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    values = np.asarray(q_initial, dtype=np.float64)
    k = int(np.count_nonzero(values > mu + alpha * sigma))
    return max(1, k)


def _normalized_vector(j_bar: np.ndarray, beta: float) -> np.ndarray:
    mean = float(j_bar.mean())
    if mean == 0.0:
        return np.zeros_like(j_bar)
    return np.minimum(beta, (beta / 2.0) * j_bar / mean)


def _live_scores(state: BanditState, beta: float) -> np.ndarray:
    scores = _normalized_vector(state.j_bar, beta)
    bonus = np.full(state.num_samples, np.inf)
    visited = state.counts > 0
    bonus[visited] = np.sqrt(2.0 * math.log(state.n) / state.counts[visited])
    return scores + bonus


def _require_scored(state: BanditState, op: str) -> None:
    if np.any(state.counts < 1):
        raise ValueError(f"{op} requires a completed scoring pass (every n_i >= 1)")


def _top_pool(scores: np.ndarray, k: int) -> np.ndarray:
    # Descending score, ties broken by ascending sample id, exactly k entries.
    order = np.lexsort((np.arange(len(scores)), -scores))
    return order[:k]


def select_uniform(num_samples: int, rng: np.random.Generator) -> int:
    """Uniform draw over the corpus."""
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    return int(rng.integers(num_samples))


def select_ucb(state: BanditState) -> int:
    """Greedy argmax of the live scores, ties broken by ascending id."""
    _require_scored(state, "select_ucb")
    return int(np.argmax(state.q))


def select_ohem(
    state: BanditState,
    rng: np.random.Generator,
    pool_size: int = DEFAULT_OHEM_POOL,
) -> int:
    """Uniform draw among the ``pool_size`` largest average rewards.

    No exploration term: pure hardest-first, relaxed only by the uniform
    draw inside the pool.  ``pool_size`` is clamped to the corpus size, so
    ``pool_size=1`` is greedy hardest-first and ``pool_size>=M`` is uniform.
    """
    _require_scored(state, "select_ohem")
    if pool_size < 1:
        raise ValueError("pool_size must be >= 1")
    pool = _top_pool(state.j_bar, min(pool_size, state.num_samples))
    return int(pool[rng.integers(len(pool))])


def select_rucb(
    state: BanditState,
    q_initial: Sequence[float],
    config: PolicyConfig,
    rng: np.random.Generator,
    alpha_rng: np.random.Generator | None = None,
) -> RucbChoice:
    """One relaxed-UCB selection.  Does not mutate the statistics.

    Draws alpha ~ U(0, a) (or takes the configured fixed alpha / fixed K),
    turns it into a pool size K against the frozen first-pass scores, then
    draws uniformly among the K samples with the largest live scores.  The
    alpha draw comes from ``alpha_rng`` when given so the pool draw stream
    stays replayable on its own.
    """
    _require_scored(state, "select_rucb")
    if state.mu is None or state.sigma is None:
        raise ValueError("select_rucb requires frozen mu/sigma from a scoring pass")
    q_init = np.asarray(q_initial, dtype=np.float64)
    if q_init.shape != (state.num_samples,):
        raise ValueError("q_initial length must match the corpus size")

    if config.variant == VARIANT_FIXED_K:
        config.validate_for_corpus(state.num_samples)
        alpha: float | None = None
        k = config.fixed_k
    else:
        if config.variant == VARIANT_DYNAMIC_ALPHA:
            alpha = float((alpha_rng or rng).uniform(0.0, config.a))
        else:
            alpha = float(config.fixed_alpha)
        k = dynamic_k(q_init, state.mu, state.sigma, alpha)

    pool = _top_pool(state.q, k)
    sample_id = int(pool[rng.integers(len(pool))])
    return RucbChoice(sample_id=sample_id, alpha=alpha, k=k)


def record_reward(
    state: BanditState,
    sample_id: int,
    reward: float,
    beta: float = DEFAULT_BETA,
) -> None:
    """Fold one observed reward into the statistics, in place.

    Increments n and n_i, updates the running average, and refreshes the
    live scores of all samples (the corpus mean in the normalization shifts
    with every observation).  Rewards are clamped at 0 below as a safety
    net; learners are expected to emit non-negative losses.
    """
    if not 0 <= sample_id < state.num_samples:
        raise ValueError(f"sample_id {sample_id} out of range")
    value = max(0.0, float(reward))
    state.counts[sample_id] += 1
    state.n += 1
    state.reward_sums[sample_id] += value
    state.j_bar[sample_id] = state.reward_sums[sample_id] / state.counts[sample_id]
    state.q = _live_scores(state, beta)


def reset_stats(state: BanditState) -> None:
    """Zero every statistic and invalidate the frozen phase statistics."""
    state.counts[:] = 0
    state.reward_sums[:] = 0.0
    state.j_bar[:] = 0.0
    state.n = 0
    state.mu = None
    state.sigma = None
    state.q = np.full(state.num_samples, np.inf, dtype=np.float64)
