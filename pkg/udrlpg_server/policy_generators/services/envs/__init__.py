from typing import Any, Dict, Optional

from pydantic import ValidationError

from ...exceptions import ConfigurationError
from .base_env import BaseEnvironment, EnvContract, EpisodeResult
from .bimodal_bandit import BimodalBandit, BimodalBanditConstants
from .cartpole import CartPoleBalance, CartPoleConstants
from .point_reacher import PointReacher, PointReacherConstants
from .rollout import rollout, rollout_batch

ENVIRONMENTS = {
    CartPoleBalance.name: (CartPoleBalance, CartPoleConstants),
    PointReacher.name: (PointReacher, PointReacherConstants),
    BimodalBandit.name: (BimodalBandit, BimodalBanditConstants),
}


def get_environment(name: str, constants: Optional[Dict[str, Any]] = None) -> BaseEnvironment:
    """
    Factory function to build a fresh environment instance by name.
    """
    try:
        env_class, constants_class = ENVIRONMENTS[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown environment '{name}', expected one of {sorted(ENVIRONMENTS)}"
        )
    try:
        return env_class(constants_class(**(constants or {})))
    except ValidationError as e:
        raise ConfigurationError(f"Invalid constants for {name}: {e}") from e


__all__ = [
    "BaseEnvironment",
    "EnvContract",
    "EpisodeResult",
    "ENVIRONMENTS",
    "get_environment",
    "rollout",
    "rollout_batch",
]
