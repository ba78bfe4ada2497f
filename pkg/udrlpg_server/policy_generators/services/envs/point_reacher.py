from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .base_env import BaseEnvironment, EnvContract


class PointReacherConstants(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    target: float = 0.5
    position_limit: float = Field(default=1.5, gt=0)
    velocity_limit: float = Field(default=1.0, gt=0)
    acceleration_limit: float = Field(default=1.0, gt=0)
    dt: float = Field(default=0.1, gt=0)
    init_noise: float = Field(default=0.1, ge=0)
    max_steps: int = Field(default=200, gt=0)


class PointReacher(BaseEnvironment):
    """
    A point mass on a line driven by its acceleration. Reward is minus the
    distance to the target at every step; episodes always last max_steps.
    Position and velocity are clipped to their limits, and hitting a wall
    stops the point.
    """

    name = "point-reacher"

    def __init__(self, constants: PointReacherConstants = None):
        super().__init__()
        self.constants = constants or PointReacherConstants()
        self.state = np.zeros(2)
        c = self.constants
        worst_step = c.position_limit + abs(c.target)
        self._contract = EnvContract(
            obs_dim=2,
            action_dim=1,
            action_low=(-c.acceleration_limit,),
            action_high=(c.acceleration_limit,),
            max_steps=c.max_steps,
            known_return_range=(-worst_step * c.max_steps, 0.0),
        )

    @property
    def contract(self) -> EnvContract:
        return self._contract

    def _reset_state(self, rng: np.random.Generator) -> np.ndarray:
        noise = self.constants.init_noise
        self.state = np.array([rng.uniform(-noise, noise), 0.0])
        return self.state.copy()

    def _transition(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        c = self.constants
        acceleration = float(np.clip(action[0], -c.acceleration_limit, c.acceleration_limit))
        position, velocity = self.state

        velocity = float(np.clip(velocity + c.dt * acceleration, -c.velocity_limit, c.velocity_limit))
        position = position + c.dt * velocity
        if abs(position) >= c.position_limit:
            position = float(np.clip(position, -c.position_limit, c.position_limit))
            velocity = 0.0

        self.state = np.array([position, velocity])
        return self.state.copy(), -abs(position - c.target), False
