import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .base_env import BaseEnvironment, EnvContract


class CartPoleConstants(BaseModel):
    """Physical constants of the cart-pole, Euler-integrated."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gravity: float = Field(default=9.8, gt=0)
    cart_mass: float = Field(default=1.0, gt=0)
    pole_mass: float = Field(default=0.1, gt=0)
    half_pole_length: float = Field(default=0.5, gt=0)
    force_limit: float = Field(default=3.0, gt=0, description="Force bound in newtons")
    dt: float = Field(default=0.02, gt=0)
    angle_limit: float = Field(default=0.2, gt=0, description="Pole angle threshold in radians")
    position_limit: float = Field(default=2.4, gt=0)
    init_noise: float = Field(default=0.05, ge=0)
    max_steps: int = Field(default=1000, gt=0)


class CartPoleBalance(BaseEnvironment):
    """
    Keep a pole upright on a cart by pushing the cart left or right.
    Observation (x, x_dot, phi, phi_dot); reward +1 per step that does not
    end with the pole or the cart out of bounds.
    """

    name = "cartpole-balance"

    def __init__(self, constants: CartPoleConstants = None):
        super().__init__()
        self.constants = constants or CartPoleConstants()
        self.state = np.zeros(4)
        c = self.constants
        self._contract = EnvContract(
            obs_dim=4,
            action_dim=1,
            action_low=(-c.force_limit,),
            action_high=(c.force_limit,),
            max_steps=c.max_steps,
            known_return_range=(0.0, float(c.max_steps)),
        )

    @property
    def contract(self) -> EnvContract:
        return self._contract

    def _reset_state(self, rng: np.random.Generator) -> np.ndarray:
        noise = self.constants.init_noise
        self.state = rng.uniform(-noise, noise, size=4)
        return self.state.copy()

    def _transition(self, action: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        c = self.constants
        force = float(np.clip(action[0], -c.force_limit, c.force_limit))
        x, x_dot, phi, phi_dot = self.state

        total_mass = c.cart_mass + c.pole_mass
        pole_moment = c.pole_mass * c.half_pole_length
        cos_phi = math.cos(phi)
        sin_phi = math.sin(phi)

        temp = (force + pole_moment * phi_dot * phi_dot * sin_phi) / total_mass
        phi_acc = (c.gravity * sin_phi - cos_phi * temp) / (
            c.half_pole_length * (4.0 / 3.0 - c.pole_mass * cos_phi * cos_phi / total_mass)
        )
        x_acc = temp - pole_moment * phi_acc * cos_phi / total_mass

        x = x + c.dt * x_dot
        x_dot = x_dot + c.dt * x_acc
        phi = phi + c.dt * phi_dot
        phi_dot = phi_dot + c.dt * phi_acc
        self.state = np.array([x, x_dot, phi, phi_dot])

        terminated = abs(phi) > c.angle_limit or abs(x) > c.position_limit
        reward = 0.0 if terminated else 1.0
        return self.state.copy(), reward, terminated
