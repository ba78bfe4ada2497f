import logging
from concurrent.futures import Executor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ...exceptions import ConfigurationError
from ..policy import Policy, RunningNorm
from .base_env import BaseEnvironment, EpisodeResult, Seed

logger = logging.getLogger(__name__)


def rollout(
    env: BaseEnvironment,
    policy: Policy,
    norm: RunningNorm,
    seed: Seed,
    observations: Optional[List[np.ndarray]] = None,
) -> EpisodeResult:
    """
    Run one episode with the policy and return its undiscounted return.

    The normalizer is updated with every observation before the policy acts
    on it. Visited observations are appended to `observations` when given.
    """
    contract = env.contract
    if policy.spec.input_size != contract.obs_dim or policy.spec.output_size != contract.action_dim:
        raise ConfigurationError(
            f"Policy {list(policy.spec.layer_sizes)} does not fit {env.name} "
            f"(obs {contract.obs_dim}, action {contract.action_dim})"
        )

    low = np.asarray(contract.action_low)
    high = np.asarray(contract.action_high)
    obs = env.reset(seed)
    episode_return = 0.0
    done = False
    while not done:
        norm.update(obs)
        if observations is not None:
            observations.append(obs)
        action = np.clip(policy.act(obs, norm, step=env.steps_taken), low, high)
        obs, reward, done = env.step(action)
        episode_return += reward

    return EpisodeResult(episode_return=episode_return, steps=env.steps_taken)


def rollout_batch(
    env_factory: Callable[[], BaseEnvironment],
    policies: Sequence[Policy],
    seeds: Sequence[Seed],
    norm: RunningNorm,
    executor: Optional[Executor] = None,
    merge: bool = True,
) -> List[EpisodeResult]:
    """
    Evaluate several policies, each on a private environment and a private
    copy of the normalizer as it stood before the batch. Visited observations
    are merged into `norm` afterwards in policy order, so results do not
    depend on how many workers ran them. With merge=False `norm` is left
    untouched.
    """
    if len(policies) != len(seeds):
        raise ConfigurationError(f"{len(policies)} policies but {len(seeds)} seeds")

    frozen = norm.copy()

    def run(job: Tuple[Policy, Seed]) -> Tuple[EpisodeResult, List[np.ndarray]]:
        policy, seed = job
        visited: List[np.ndarray] = []
        result = rollout(env_factory(), policy, frozen.copy(), seed, observations=visited)
        return result, visited

    jobs = list(zip(policies, seeds))
    outcomes = list(executor.map(run, jobs)) if executor is not None else [run(job) for job in jobs]

    results = []
    for result, visited in outcomes:
        if merge:
            norm.update_many(visited)
        results.append(result)
    return results
