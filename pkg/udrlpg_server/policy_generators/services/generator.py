"""
Hypernetwork that decodes a scalar return command into the flat parameter
vector of a policy network, trained by hindsight regression on replay data.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ConfigurationError, NonFiniteError
from .envs.base_env import Seed
from .nncore import AdamState, FlatParams, NetSpec, adam_step, backward, forward, init_params, mse

logger = logging.getLogger(__name__)

Target = Union[FlatParams, np.ndarray]


@dataclass(frozen=True)
class CommandNorm:
    """Affine map from the return range [r_min, r_max] onto [-1, 1]."""

    r_min: float
    r_max: float

    def __post_init__(self):
        if not self.r_max > self.r_min:
            raise ConfigurationError(
                f"Return range must have r_max > r_min, got [{self.r_min}, {self.r_max}]"
            )

    @property
    def span(self) -> float:
        return self.r_max - self.r_min

    def normalize(self, command: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return 2.0 * (command - self.r_min) / self.span - 1.0

    def denormalize(self, value: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return (value + 1.0) / 2.0 * self.span + self.r_min

    def contains(self, command: float) -> bool:
        return self.r_min <= command <= self.r_max

    def to_dict(self) -> Dict[str, float]:
        return {"r_min": self.r_min, "r_max": self.r_max}


def generator_spec(
    policy_spec: NetSpec, hidden_sizes: Sequence[int] = (64, 64), hidden_activation: str = "tanh"
) -> NetSpec:
    return NetSpec(
        layer_sizes=(1, *hidden_sizes, policy_spec.param_count),
        hidden_activation=hidden_activation,
        output_activation="identity",
    )


class Generator:
    """
    G_rho: command -> policy parameters.

    rho is held as an immutable FlatParams that train_batch replaces after
    each step, so a snapshot taken before a rollout stage never changes.
    """

    def __init__(
        self,
        spec: NetSpec,
        rho: FlatParams,
        optimizer: AdamState,
        command_norm: CommandNorm,
        sigma: float,
        policy_spec: NetSpec,
    ):
        if spec.input_size != 1:
            raise ConfigurationError(f"Generator input size must be 1, got {spec.input_size}")
        if spec.output_size != policy_spec.param_count:
            raise ConfigurationError(
                f"Generator output size {spec.output_size} does not match policy "
                f"param_count {policy_spec.param_count}"
            )
        if sigma < 0:
            raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
        self.spec = spec
        self.rho = rho
        self.optimizer = optimizer
        self.command_norm = command_norm
        self.sigma = float(sigma)
        self.policy_spec = policy_spec

    @classmethod
    def create(
        cls,
        policy_spec: NetSpec,
        command_norm: CommandNorm,
        seed: Seed,
        sigma: float = 0.02,
        hidden_sizes: Sequence[int] = (64, 64),
        hidden_activation: str = "tanh",
        output_init_scale: float = 0.01,
        **adam_constants,
    ) -> "Generator":
        spec = generator_spec(policy_spec, hidden_sizes, hidden_activation)
        rho = init_params(spec, np.random.default_rng(seed), output_scale=output_init_scale)
        return cls(
            spec=spec,
            rho=rho,
            optimizer=AdamState.zeros(spec.param_count, **adam_constants),
            command_norm=command_norm,
            sigma=sigma,
            policy_spec=policy_spec,
        )

    def snapshot(self) -> "Generator":
        """Read-only view of the current rho for a rollout stage."""
        return Generator(
            self.spec, self.rho, self.optimizer, self.command_norm, self.sigma, self.policy_spec
        )

    def generate(self, command: float) -> FlatParams:
        command = float(command)
        if not np.isfinite(command):
            raise NonFiniteError(f"Non-finite command {command}")
        if not self.command_norm.contains(command):
            logger.warning(
                f"Command {command:.4g} outside known return range "
                f"[{self.command_norm.r_min:.4g}, {self.command_norm.r_max:.4g}]"
            )

        theta, _ = forward(self.spec, self.rho, np.array([self.command_norm.normalize(command)]))
        if not np.all(np.isfinite(theta)):
            logger.error(f"Generator produced non-finite parameters for command {command}")
            raise NonFiniteError(f"Generator produced non-finite parameters for command {command}")
        return FlatParams(spec=self.policy_spec, values=theta)

    def _stack_batch(self, batch: Sequence[Tuple[float, Target]]) -> Tuple[np.ndarray, np.ndarray]:
        if not batch:
            raise ConfigurationError("train_batch needs a nonempty batch")
        commands = np.array([[self.command_norm.normalize(float(c))] for c, _ in batch])
        targets = []
        for _, theta in batch:
            values = theta.values if isinstance(theta, FlatParams) else np.asarray(theta, dtype=np.float64)
            if values.shape != (self.spec.output_size,):
                raise ConfigurationError(
                    f"Target of length {values.size}, generator outputs {self.spec.output_size}"
                )
            targets.append(values)
        return commands, np.vstack(targets)

    def loss_and_gradient(
        self, batch: Sequence[Tuple[float, Target]], rho: Optional[FlatParams] = None
    ) -> Tuple[float, np.ndarray]:
        """Mean over the batch of per-pair MSE, and its gradient w.r.t. rho."""
        rho = self.rho if rho is None else rho
        commands, targets = self._stack_batch(batch)
        pred, cache = forward(self.spec, rho, commands)
        loss, upstream = mse(pred, targets)
        if not np.isfinite(loss):
            return loss, np.full(self.spec.param_count, np.nan)
        grad, _ = backward(cache, upstream)
        return loss, grad

    def train_batch(self, batch: Sequence[Tuple[float, Target]]) -> float:
        """One Adam step on rho. Returns the loss before the step."""
        loss, grad = self.loss_and_gradient(batch)
        if not np.isfinite(loss):
            logger.warning(f"Skipping generator update: non-finite loss {loss}")
            return loss

        try:
            values, self.optimizer = adam_step(self.optimizer, self.rho.values, grad)
        except NonFiniteError as e:
            logger.warning(f"Skipping generator update: {e.detail}")
            return loss
        self.rho = self.rho.with_values(values)
        return loss

    def to_fragment(self) -> Dict[str, Any]:
        return {
            "network": self.rho.to_fragment(),
            "policy_spec": self.policy_spec.to_dict(),
            "command_norm": self.command_norm.to_dict(),
            "sigma": self.sigma,
            "optimizer": self.optimizer.to_dict(),
        }

    @classmethod
    def from_fragment(cls, fragment: Dict[str, Any]) -> "Generator":
        try:
            rho = FlatParams.from_fragment(fragment["network"])
            return cls(
                spec=rho.spec,
                rho=rho,
                optimizer=AdamState.from_dict(fragment["optimizer"]),
                command_norm=CommandNorm(**fragment["command_norm"]),
                sigma=fragment["sigma"],
                policy_spec=NetSpec.from_dict(fragment["policy_spec"]),
            )
        except KeyError as e:
            raise ConfigurationError(f"Generator fragment is missing field {e}") from e


def perturb(theta: FlatParams, sigma: float, seed: Seed) -> FlatParams:
    """theta + eps with eps ~ N(0, sigma^2 I), no clipping."""
    if sigma < 0:
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return theta
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=len(theta))
    return theta.with_values(theta.values + noise)

