from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .base_env import BaseEnvironment, EnvContract


class BimodalBanditConstants(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    peak_reward: float = Field(default=10.0, gt=0)
    mode: float = Field(default=0.5, gt=0, lt=1)


def bandit_reward(action: float, peak_reward: float = 10.0, mode: float = 0.5) -> float:
    """peak * max(0, 1 - 2 * ||a| - mode|): optima at a = +/- mode, zero at a = 0."""
    return peak_reward * max(0.0, 1.0 - 2.0 * abs(abs(action) - mode))


class BimodalBandit(BaseEnvironment):
    """
    Single-step environment with two equally good actions. The average of the
    two optimal actions scores nothing.
    """

    name = "bimodal-bandit"

    def __init__(self, constants: BimodalBanditConstants = None):
        super().__init__()
        self.constants = constants or BimodalBanditConstants()
        self._contract = EnvContract(
            obs_dim=1,
            action_dim=1,
            action_low=(-1.0,),
            action_high=(1.0,),
            max_steps=1,
            known_return_range=(0.0, self.constants.peak_reward),
        )

    @property
    def contract(self) -> EnvContract:
        return self._contract

    def _reset_state(self, rng: np.random.Generator) -> np.ndarray:
        return np.ones(1)

    def _transition(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        reward = bandit_reward(
            float(np.clip(action[0], -1.0, 1.0)),
            self.constants.peak_reward,
            self.constants.mode,
        )
        return np.ones(1), reward, True
