"""
Pydantic models for run configuration.
Loaded from TOML files by the management commands and echoed into every checkpoint.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import tomli
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, field_validator

from ..exceptions import ConfigurationError

BUFFER_STRATEGIES = ("buckets_weighted", "buckets_uniform", "flat_weighted", "flat_uniform")

EnvName = Literal["cartpole-balance", "point-reacher", "bimodal-bandit"]
Strategy = Literal["buckets_weighted", "buckets_uniform", "flat_weighted", "flat_uniform"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class EnvSettings(_Section):
    """Environment selection and constant overrides"""

    name: EnvName = Field(default="cartpole-balance")
    constants: Dict[str, Union[float, int]] = Field(
        default_factory=dict,
        description="Overrides for the environment's documented constants",
    )


class PolicySettings(_Section):
    """Architecture of the generated control policies"""

    hidden_sizes: List[PositiveInt] = Field(default_factory=lambda: [32])
    hidden_activation: Literal["tanh", "relu"] = "tanh"


class GeneratorSettings(_Section):
    """Architecture of the hypernetwork"""

    hidden_sizes: List[PositiveInt] = Field(default_factory=lambda: [64, 64])
    hidden_activation: Literal["tanh", "relu"] = "tanh"
    output_init_scale: float = Field(
        default=0.01, ge=0, description="Multiplier on the output layer's initial weights"
    )


class OptimizerSettings(_Section):
    """Adam constants for the generator"""

    alpha: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)


class BufferSettings(_Section):
    """Geometry, sampling strategy and command selection of the replay buffer"""

    n_buckets: PositiveInt = 10
    capacity_per_bucket: PositiveInt = 50
    strategy: Strategy = "buckets_weighted"
    rank_weights: Optional[List[float]] = Field(
        default=None,
        description="Weight per ascending rank of nonempty buckets; default 1 + rank",
    )
    min_window_fraction: float = Field(
        default=0.02, ge=0, le=1, description="Width of the command window when the best return is 0, as a fraction of the return span"
    )

    @field_validator("rank_weights")
    @classmethod
    def _positive_weights(cls, value):
        if value is not None and (not value or any(w <= 0 for w in value)):
            raise ValueError("rank_weights must be a nonempty list of positive numbers")
        return value


class RunConfig(_Section):
    """Every hyperparameter of one training run. The seed fixes the whole run."""

    env: EnvSettings = Field(default_factory=EnvSettings)
    policy: PolicySettings = Field(default_factory=PolicySettings)
    generator: GeneratorSettings = Field(default_factory=GeneratorSettings)
    optimizer: OptimizerSettings = Field(default_factory=OptimizerSettings)
    buffer: BufferSettings = Field(default_factory=BufferSettings)

    n_init_random: PositiveInt = 50
    updates_per_stage: PositiveInt = 100
    batch_size: PositiveInt = 32
    rollouts_per_stage: PositiveInt = 8
    total_stages: int = Field(default=300, ge=0)
    sigma: float = Field(default=0.02, ge=0, description="Std of the parameter-space perturbation")
    seed: int = Field(default=0, ge=0)
    workers: PositiveInt = 1
    output_dir: str = "runs/default"

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with top-level fields replaced; `strategy` updates the buffer section."""
        data = self.model_dump()
        strategy = overrides.pop("strategy", None)
        if strategy is not None:
            data["buffer"]["strategy"] = strategy
        data.update({key: value for key, value in overrides.items() if value is not None})
        return validate_run_config(data)


def validate_run_config(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid run config: {e}") from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Parse and validate a TOML run config."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomli.load(handle)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {path}") from e
    except tomli.TOMLDecodeError as e:
        raise ConfigurationError(f"Config file {path} is not valid TOML: {e}") from e
    return validate_run_config(data)
