from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ...exceptions import ConfigurationError, NonFiniteError

Seed = Union[int, np.random.SeedSequence]


@dataclass(frozen=True)
class EnvContract:
    """Dimensions, action box, episode cap and return bounds of an environment."""

    obs_dim: int
    action_dim: int
    action_low: Tuple[float, ...]
    action_high: Tuple[float, ...]
    max_steps: int
    known_return_range: Tuple[float, float]

    @property
    def r_min(self) -> float:
        return self.known_return_range[0]

    @property
    def r_max(self) -> float:
        return self.known_return_range[1]


@dataclass(frozen=True)
class EpisodeResult:
    """Undiscounted return and step count of one rollout."""

    episode_return: float
    steps: int


class BaseEnvironment(ABC):
    """
    Episodic environment with a seeded reset and a deterministic step.
    Subclasses implement _reset_state and _transition.
    """

    name: str = ""

    def __init__(self):
        self._rng = np.random.default_rng(0)
        self._steps = 0
        self._done = True

    @property
    @abstractmethod
    def contract(self) -> EnvContract:
        """Dimensions and bounds of this environment."""
        pass

    @abstractmethod
    def _reset_state(self, rng: np.random.Generator) -> np.ndarray:
        """Draw the initial state and return the first observation."""
        pass

    @abstractmethod
    def _transition(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        """Advance one step: (observation, reward, terminated)."""
        pass

    def reset(self, seed: Seed) -> np.ndarray:
        self._rng = np.random.default_rng(seed)
        self._steps = 0
        self._done = False
        return self._reset_state(self._rng)

    def step(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        if self._done:
            raise ConfigurationError(f"{self.name}: step called on a finished episode, reset first")

        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape != (self.contract.action_dim,):
            raise ConfigurationError(
                f"{self.name}: action of size {action.size}, expected {self.contract.action_dim}"
            )
        if not np.all(np.isfinite(action)):
            raise NonFiniteError(f"{self.name}: non-finite action {action.tolist()} at step {self._steps}")

        obs, reward, terminated = self._transition(action)
        self._steps += 1
        self._done = terminated or self._steps >= self.contract.max_steps
        return obs, float(reward), self._done

    @property
    def steps_taken(self) -> int:
        return self._steps
