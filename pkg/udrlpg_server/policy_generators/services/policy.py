"""
The controlled agent: a deterministic dense network acting on normalized
observations, and the running observation normalizer shared by a run.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, NonFiniteError
from .nncore import FlatParams, NetSpec, forward, init_params

logger = logging.getLogger(__name__)

NORM_EPSILON = 1e-8
NORM_CLIP = 10.0


class RunningNorm:
    """Per-coordinate running mean and variance (Welford)."""

    def __init__(
        self,
        dim: int,
        count: int = 0,
        mean: Optional[np.ndarray] = None,
        m2: Optional[np.ndarray] = None,
    ):
        self.dim = int(dim)
        self.count = int(count)
        self.mean = np.zeros(dim) if mean is None else np.array(mean, dtype=np.float64)
        self.m2 = np.zeros(dim) if m2 is None else np.array(m2, dtype=np.float64)

    @property
    def variance(self) -> np.ndarray:
        return self.m2 / max(self.count - 1, 1)

    def _check(self, obs: np.ndarray) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != (self.dim,):
            raise ConfigurationError(
                f"Observation shape {obs.shape} does not match normalizer dim {self.dim}"
            )
        return obs

    def update(self, obs: np.ndarray) -> "RunningNorm":
        obs = self._check(obs)
        self.count += 1
        delta = obs - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (obs - self.mean)
        return self

    def update_many(self, observations: Sequence[np.ndarray]) -> "RunningNorm":
        for obs in observations:
            self.update(obs)
        return self

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        obs = self._check(obs)
        if self.count < 2:
            return obs.copy()
        scaled = (obs - self.mean) / np.sqrt(self.variance + NORM_EPSILON)
        return np.clip(scaled, -NORM_CLIP, NORM_CLIP)

    def copy(self) -> "RunningNorm":
        return RunningNorm(self.dim, self.count, self.mean, self.m2)

    def to_dict(self) -> Dict[str, Any]:
        return {"count": self.count, "mean": self.mean.tolist(), "m2": self.m2.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunningNorm":
        mean = np.asarray(data["mean"], dtype=np.float64)
        return cls(mean.size, data["count"], mean, data["m2"])

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunningNorm):
            return NotImplemented
        return (
            self.count == other.count
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.m2, other.m2)
        )

    def __repr__(self):
        return f"RunningNorm(dim={self.dim}, count={self.count})"


def policy_spec(
    obs_dim: int,
    action_dim: int,
    hidden_sizes: Sequence[int] = (32,),
    hidden_activation: str = "tanh",
) -> NetSpec:
    return NetSpec(
        layer_sizes=(obs_dim, *hidden_sizes, action_dim),
        hidden_activation=hidden_activation,
        output_activation="tanh",
    )


@dataclass(frozen=True)
class Policy:
    """Deterministic policy whose tanh outputs are mapped onto the action box."""

    params: FlatParams
    action_low: np.ndarray
    action_high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.action_low, dtype=np.float64).reshape(-1)
        high = np.asarray(self.action_high, dtype=np.float64).reshape(-1)
        if self.spec.output_activation != "tanh":
            raise ConfigurationError("Policy networks must use a tanh output layer")
        if low.shape != (self.spec.output_size,) or high.shape != low.shape:
            raise ConfigurationError(
                f"Action bounds of size {low.size} do not match policy output size "
                f"{self.spec.output_size}"
            )
        object.__setattr__(self, "action_low", low)
        object.__setattr__(self, "action_high", high)

    @property
    def spec(self) -> NetSpec:
        return self.params.spec

    def act(self, obs: np.ndarray, norm: RunningNorm, step: Optional[int] = None) -> np.ndarray:
        obs = np.asarray(obs, dtype=np.float64)
        if not np.all(np.isfinite(obs)):
            raise NonFiniteError(f"Non-finite observation {obs.tolist()} at environment step {step}")
        squashed, _ = forward(self.spec, self.params, norm.normalize(obs))
        return self.action_low + (squashed + 1.0) / 2.0 * (self.action_high - self.action_low)

    def to_fragment(self, norm: RunningNorm) -> Dict[str, Any]:
        """Network fragment plus the action box and the normalizer the policy acts under."""
        fragment = self.params.to_fragment()
        fragment["action_low"] = self.action_low.tolist()
        fragment["action_high"] = self.action_high.tolist()
        fragment["norm"] = norm.to_dict()
        return fragment

    @classmethod
    def from_fragment(cls, fragment: Dict[str, Any]) -> Tuple["Policy", RunningNorm]:
        try:
            policy = cls(
                params=FlatParams.from_fragment(fragment),
                action_low=fragment["action_low"],
                action_high=fragment["action_high"],
            )
            norm = RunningNorm.from_dict(fragment["norm"])
        except KeyError as e:
            raise ConfigurationError(f"Policy fragment is missing field {e}") from e
        if norm.dim != policy.spec.input_size:
            raise ConfigurationError(
                f"Policy fragment normalizer has dim {norm.dim}, network expects {policy.spec.input_size}"
            )
        return policy, norm


def act(policy: Policy, obs: np.ndarray, norm: RunningNorm, step: Optional[int] = None) -> np.ndarray:
    return policy.act(obs, norm, step)


def random_policy(
    spec: NetSpec, seed: int, action_low: Sequence[float], action_high: Sequence[float]
) -> Policy:
    params = init_params(spec, np.random.default_rng(seed))
    return Policy(params=params, action_low=action_low, action_high=action_high)
