"""
Hindsight replay buffer: return-range buckets of bounded FIFO stores, the
bucket-weighting strategies used to sample training pairs, and the rule
that picks the commands issued in a rollout stage.
"""

import hashlib
import logging
import math
from collections import deque
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Callable, Deque, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, EmptyBufferError
from .envs import BaseEnvironment, EpisodeResult, rollout_batch
from .envs.base_env import Seed
from .nncore import FlatParams, NetSpec
from .policy import Policy, RunningNorm, random_policy

logger = logging.getLogger(__name__)

BUCKET_STRATEGIES = ("buckets_weighted", "buckets_uniform")
FLAT_STRATEGIES = ("flat_weighted", "flat_uniform")

SNAPSHOT_HEADER = [
    "bucket",
    "observed_return",
    "birth_iteration",
    "theta_0",
    "theta_1",
    "theta_2",
    "theta_3",
    "theta_sha256",
]


@dataclass(frozen=True)
class BufferEntry:
    """A generated policy stored with the return it actually achieved."""

    observed_return: float
    theta: FlatParams
    birth_iteration: int


def extrapolation_ceiling(r_min: float, r_max: float) -> float:
    """Highest command ever issued: 1.1 * r_max for nonnegative ranges."""
    return r_max + 0.1 * max(abs(r_max), r_max - r_min)


def theta_digest(theta: FlatParams) -> str:
    return hashlib.sha256(theta.values.tobytes()).hexdigest()


class BucketedBuffer:
    """Replay buffer partitioned into equal-width return buckets."""

    def __init__(
        self,
        r_min: float,
        r_max: float,
        n_buckets: int = 10,
        capacity_per_bucket: int = 50,
        strategy: str = "buckets_weighted",
        rank_weights: Optional[Sequence[float]] = None,
        min_window_fraction: float = 0.02,
    ):
        if not r_max > r_min:
            raise ConfigurationError(f"Buffer range must have r_max > r_min, got [{r_min}, {r_max}]")
        if n_buckets < 1 or capacity_per_bucket < 1:
            raise ConfigurationError("n_buckets and capacity_per_bucket must be positive")
        if strategy not in BUCKET_STRATEGIES + FLAT_STRATEGIES:
            raise ConfigurationError(f"Unknown buffer strategy '{strategy}'")
        if rank_weights is not None and len(rank_weights) != n_buckets:
            raise ConfigurationError(
                f"rank_weights needs one weight per bucket ({n_buckets}), got {len(rank_weights)}"
            )

        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.n_buckets = n_buckets
        self.capacity_per_bucket = capacity_per_bucket
        self.strategy = strategy
        self.rank_weights = None if rank_weights is None else np.asarray(rank_weights, dtype=np.float64)
        self.min_window_fraction = min_window_fraction
        self.buckets: List[Deque[BufferEntry]] = [
            deque(maxlen=capacity_per_bucket) for _ in range(n_buckets)
        ]

    @classmethod
    def from_settings(cls, r_min: float, r_max: float, settings) -> "BucketedBuffer":
        return cls(
            r_min,
            r_max,
            n_buckets=settings.n_buckets,
            capacity_per_bucket=settings.capacity_per_bucket,
            strategy=settings.strategy,
            rank_weights=settings.rank_weights,
            min_window_fraction=settings.min_window_fraction,
        )

    @property
    def width(self) -> float:
        return (self.r_max - self.r_min) / self.n_buckets

    def __len__(self) -> int:
        return sum(len(bucket) for bucket in self.buckets)

    def __iter__(self) -> Iterator[BufferEntry]:
        for bucket in self.buckets:
            yield from bucket

    def occupancy(self) -> List[int]:
        return [len(bucket) for bucket in self.buckets]

    def best_entry(self) -> BufferEntry:
        if len(self) == 0:
            raise EmptyBufferError()
        return max(self, key=lambda entry: entry.observed_return)

    def max_return(self) -> float:
        return self.best_entry().observed_return

    def bucket_index(self, return_value: float) -> int:
        """Half-open [lo, hi) buckets; r_max belongs to the last bucket."""
        value = float(return_value)
        if value < self.r_min or value > self.r_max:
            logger.warning(
                f"Return {value:.6g} outside buffer range [{self.r_min:.6g}, {self.r_max:.6g}], clamping"
            )
            value = min(max(value, self.r_min), self.r_max)
        index = math.floor((value - self.r_min) / self.width)
        return min(index, self.n_buckets - 1)

    def insert(self, entry: BufferEntry) -> None:
        """Append to the entry's bucket; a full bucket drops its oldest entry."""
        self.buckets[self.bucket_index(entry.observed_return)].append(entry)

    def bucket_probabilities(self) -> np.ndarray:
        """Draw probability of each bucket under the buckets_* strategies; zero for empty buckets."""
        sizes = np.array(self.occupancy())
        nonempty = np.flatnonzero(sizes)
        if nonempty.size == 0:
            raise EmptyBufferError()

        if self.strategy == "buckets_uniform":
            weights = np.ones(nonempty.size)
        elif self.rank_weights is not None:
            weights = self.rank_weights[: nonempty.size].copy()
        else:
            weights = 1.0 + np.arange(nonempty.size, dtype=np.float64)

        probabilities = np.zeros(self.n_buckets)
        probabilities[nonempty] = weights / weights.sum()
        return probabilities

    def sample(self, batch_size: int, seed: Seed) -> List[Tuple[float, FlatParams]]:
        """
        Draw training pairs (observed_return, theta) with replacement. The
        command of every pair is the return stored with it.
        """
        if len(self) == 0:
            raise EmptyBufferError()
        rng = np.random.default_rng(seed)

        if self.strategy in BUCKET_STRATEGIES:
            probabilities = self.bucket_probabilities()
            chosen = rng.choice(self.n_buckets, size=batch_size, p=probabilities)
            sizes = np.array(self.occupancy())
            positions = rng.integers(0, sizes[chosen])
            picked = [self.buckets[b][p] for b, p in zip(chosen, positions)]
        else:
            entries = list(self)
            if self.strategy == "flat_uniform":
                indices = rng.integers(0, len(entries), size=batch_size)
            else:
                returns = np.array([entry.observed_return for entry in entries])
                weights = 1.0 + (returns - self.r_min) / (self.r_max - self.r_min)
                indices = rng.choice(len(entries), size=batch_size, p=weights / weights.sum())
            picked = [entries[i] for i in indices]

        return [(entry.observed_return, entry.theta) for entry in picked]

    def command_window(self) -> Tuple[float, float]:
        """
        [B - 0.2|B|, min(B + 0.1|B|, ceiling)] around the best stored return B.
        Only the empty window of B = 0 is widened, to min_window_fraction of the span.
        """
        best = self.max_return()
        ceiling = extrapolation_ceiling(self.r_min, self.r_max)
        low = best - 0.2 * abs(best)
        high = min(best + 0.1 * abs(best), ceiling)
        if high <= low:
            high = min(low + self.min_window_fraction * (self.r_max - self.r_min), ceiling)
        return low, high

    def select_commands(self, k: int, seed: Seed) -> List[float]:
        """k commands from the window; the first is always its upper end."""
        if k < 1:
            raise ConfigurationError(f"select_commands needs k >= 1, got {k}")
        low, high = self.command_window()
        rng = np.random.default_rng(seed)
        return [high] + rng.uniform(low, high, size=k - 1).tolist()

    def snapshot_rows(self) -> List[Dict[str, object]]:
        rows = []
        for index, bucket in enumerate(self.buckets):
            for entry in bucket:
                values = entry.theta.values
                row = {
                    "bucket": index,
                    "observed_return": repr(entry.observed_return),
                    "birth_iteration": entry.birth_iteration,
                }
                for i in range(4):
                    row[f"theta_{i}"] = repr(float(values[i])) if i < values.size else ""
                row["theta_sha256"] = theta_digest(entry.theta)
                rows.append(row)
        return rows


@dataclass(frozen=True)
class InitRandomResult:
    """Random policies of an initialization, with the rollouts that labelled them."""

    policies: List[Policy]
    warmup: List[EpisodeResult]
    scored: List[EpisodeResult]
    scoring_seeds: List[np.random.SeedSequence]

    @property
    def env_steps(self) -> int:
        return sum(result.steps for result in self.warmup) + sum(result.steps for result in self.scored)


def init_random(
    buffer: BucketedBuffer,
    n: int,
    policy_spec: NetSpec,
    env_factory: Callable[[], BaseEnvironment],
    norm: RunningNorm,
    seed: Seed,
    executor: Optional[Executor] = None,
) -> InitRandomResult:
    """
    Fill an empty buffer with n random policies at birth iteration 0.

    A warm-up pass rolls every policy out once and merges the visited
    observations into `norm`. A second pass then scores each policy against
    the warmed normalizer, which it leaves untouched, and those returns are
    the stored labels. Later rollouts normalize against the same statistics,
    so a stored policy reproduces its label when it is generated again.
    """
    if len(buffer) != 0:
        raise ConfigurationError("init_random expects an empty buffer")

    seed_sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    policy_seeds, warmup_seeds, scoring_seeds = seed_sequence.spawn(3)
    contract = env_factory().contract
    policies = [
        random_policy(policy_spec, s, contract.action_low, contract.action_high)
        for s in policy_seeds.spawn(n)
    ]

    warmup = rollout_batch(env_factory, policies, warmup_seeds.spawn(n), norm, executor)
    scoring = scoring_seeds.spawn(n)
    scored = rollout_batch(env_factory, policies, scoring, norm, executor, merge=False)

    for policy, result in zip(policies, scored):
        buffer.insert(BufferEntry(result.episode_return, policy.params, birth_iteration=0))

    logger.info(
        f"Initialized buffer with {n} random policies after a {norm.count}-observation warm-up, "
        f"occupancy {buffer.occupancy()}"
    )
    return InitRandomResult(policies=policies, warmup=warmup, scored=scored, scoring_seeds=scoring)
