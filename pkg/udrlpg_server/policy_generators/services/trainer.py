"""
Training loop: alternate an update stage (hindsight regression of the
generator on buffer samples) with a rollout stage (generate, perturb,
evaluate, relabel with the observed return, insert).
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError, TrainingAborted, UDRLPGError
from ..schemas import RunConfig
from .buffer import BucketedBuffer, BufferEntry, init_random
from .checkpoint_service import LATEST_NAME, Checkpoint, checkpoint_name, save_checkpoint
from .envs import BaseEnvironment, EnvContract, get_environment, rollout, rollout_batch
from .generator import CommandNorm, Generator, perturb
from .policy import Policy, RunningNorm, policy_spec

logger = logging.getLogger(__name__)

# Seed purposes: every random draw of a run comes from
# SeedSequence([master_seed, purpose, stage, index]).
SEED_INIT_BUFFER = 0
SEED_GENERATOR_INIT = 1
SEED_SAMPLE = 2
SEED_COMMANDS = 3
SEED_PERTURB = 4
SEED_ROLLOUT = 5
SEED_EVALUATE = 6

RUN_LOG_HEADER = [
    "stage",
    "env_steps",
    "mean_return",
    "max_return",
    "best_return",
    "loss_mean",
    "bucket_occupancy",
]


def derive_seed(master_seed: int, purpose: int, stage: int = 0, index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, purpose, stage, index])


@dataclass(frozen=True)
class StageRecord:
    stage: int
    env_steps: int
    mean_return: float
    max_return: float
    best_return: float
    loss_mean: float
    bucket_occupancy: Tuple[int, ...]
    wall_time: float = 0.0

    def csv_row(self) -> List[str]:
        return [
            str(self.stage),
            str(self.env_steps),
            repr(self.mean_return),
            repr(self.max_return),
            repr(self.best_return),
            repr(self.loss_mean),
            ";".join(str(count) for count in self.bucket_occupancy),
        ]


@dataclass
class RunLog:
    """Append-only, one record per stage."""

    records: List[StageRecord] = field(default_factory=list)

    def append(self, record: StageRecord) -> None:
        if self.records and record.stage != self.records[-1].stage + 1:
            raise ConfigurationError(f"Stage {record.stage} does not follow stage {self.records[-1].stage}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final_mean_return(self) -> Optional[float]:
        return self.records[-1].mean_return if self.records else None


def best_policy(buffer: BucketedBuffer, contract: EnvContract) -> Optional[Policy]:
    if len(buffer) == 0:
        return None
    return Policy(buffer.best_entry().theta, contract.action_low, contract.action_high)


@dataclass
class TrainingResult:
    config: RunConfig
    generator: Generator
    norm: RunningNorm
    buffer: BucketedBuffer
    run_log: RunLog
    inserted_commands: List[Tuple[int, float, float]]
    checkpoint_path: Optional[Path]
    contract: EnvContract

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            self.generator,
            self.norm,
            self.config,
            len(self.run_log),
            best_policy=best_policy(self.buffer, self.contract),
        )


class UDRLPGTrainer:
    """
    Owns the generator, the buffer and the shared normalizer of one run.

    Only the update stage changes the generator and only the rollout stage
    (and initialization) changes the buffer. Rollouts of a stage all use the
    same generator snapshot, run on up to `config.workers` threads, and are
    merged back in rollout-index order.
    """

    def __init__(
        self,
        config: RunConfig,
        output_dir: Optional[Path] = None,
        keep_stage_checkpoints: bool = True,
    ):
        self.config = config
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.keep_stage_checkpoints = keep_stage_checkpoints

        self.contract: EnvContract = self.make_env().contract
        self.policy_spec = policy_spec(
            self.contract.obs_dim,
            self.contract.action_dim,
            config.policy.hidden_sizes,
            config.policy.hidden_activation,
        )
        r_min, r_max = self.contract.known_return_range
        self.generator = Generator.create(
            self.policy_spec,
            CommandNorm(r_min, r_max),
            derive_seed(config.seed, SEED_GENERATOR_INIT),
            sigma=config.sigma,
            hidden_sizes=config.generator.hidden_sizes,
            hidden_activation=config.generator.hidden_activation,
            output_init_scale=config.generator.output_init_scale,
            **config.optimizer.model_dump(),
        )
        self.buffer = BucketedBuffer.from_settings(r_min, r_max, config.buffer)
        self.norm = RunningNorm(self.contract.obs_dim)
        self.run_log = RunLog()
        self.env_steps = 0
        self.best_return = float("-inf")
        self.inserted_commands: List[Tuple[int, float, float]] = []

    def make_env(self) -> BaseEnvironment:
        return get_environment(self.config.env.name, self.config.env.constants)

    def _seed(self, purpose: int, stage: int = 0, index: int = 0) -> np.random.SeedSequence:
        return derive_seed(self.config.seed, purpose, stage, index)

    def checkpoint(self, stage: int) -> Checkpoint:
        return Checkpoint(
            self.generator.snapshot(),
            self.norm.copy(),
            self.config,
            stage,
            best_policy=best_policy(self.buffer, self.contract),
        )

    def _write_checkpoint(self, stage: int) -> Optional[Path]:
        if self.output_dir is None:
            return None
        checkpoint = self.checkpoint(stage)
        if self.keep_stage_checkpoints:
            save_checkpoint(checkpoint, self.output_dir / checkpoint_name(stage))
        return save_checkpoint(checkpoint, self.output_dir / LATEST_NAME)

    def update_stage(self, stage: int) -> float:
        losses = []
        for update in range(self.config.updates_per_stage):
            batch = self.buffer.sample(self.config.batch_size, self._seed(SEED_SAMPLE, stage, update))
            losses.append(self.generator.train_batch(batch))
        finite = [loss for loss in losses if np.isfinite(loss)]
        return float(np.mean(finite)) if finite else float("nan")

    def rollout_stage(self, stage: int, executor=None) -> List[float]:
        snapshot = self.generator.snapshot()
        k = self.config.rollouts_per_stage
        commands = self.buffer.select_commands(k, self._seed(SEED_COMMANDS, stage))

        policies = []
        for index, command in enumerate(commands):
            theta = perturb(snapshot.generate(command), snapshot.sigma, self._seed(SEED_PERTURB, stage, index))
            policies.append(Policy(theta, self.contract.action_low, self.contract.action_high))

        seeds = [self._seed(SEED_ROLLOUT, stage, index) for index in range(k)]
        results = rollout_batch(self.make_env, policies, seeds, self.norm, executor)

        for command, policy, result in zip(commands, policies, results):
            # hindsight relabel: the issued command is discarded
            self.buffer.insert(BufferEntry(result.episode_return, policy.params, birth_iteration=stage))
            self.inserted_commands.append((stage, command, result.episode_return))
            self.env_steps += result.steps

        return [result.episode_return for result in results]

    def _initialize(self, executor) -> None:
        init = init_random(
            self.buffer,
            self.config.n_init_random,
            self.policy_spec,
            self.make_env,
            self.norm,
            self._seed(SEED_INIT_BUFFER),
            executor,
        )
        returns = [result.episode_return for result in init.scored]
        self.env_steps += init.env_steps
        self.best_return = max(returns)
        logger.info(
            f"Random initialization: mean return {np.mean(returns):.3f}, max {np.max(returns):.3f}"
        )

    def train(self) -> TrainingResult:
        config = self.config
        logger.info(
            f"Starting run: env={config.env.name} strategy={config.buffer.strategy} "
            f"seed={config.seed} stages={config.total_stages} workers={config.workers}"
        )
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            with (self.output_dir / "config.json").open("w", encoding="utf-8") as handle:
                json.dump(config.model_dump(mode="json"), handle, indent=2)

        executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
        stage = 0
        try:
            self._initialize(executor)
            latest = self._write_checkpoint(0)

            for stage in range(1, config.total_stages + 1):
                started = time.perf_counter()
                loss_mean = self.update_stage(stage)
                returns = self.rollout_stage(stage, executor)
                self.best_return = max(self.best_return, *returns)
                record = StageRecord(
                    stage=stage,
                    env_steps=self.env_steps,
                    mean_return=float(np.mean(returns)),
                    max_return=float(np.max(returns)),
                    best_return=self.best_return,
                    loss_mean=loss_mean,
                    bucket_occupancy=tuple(self.buffer.occupancy()),
                    wall_time=time.perf_counter() - started,
                )
                self.run_log.append(record)
                latest = self._write_checkpoint(stage)
                logger.info(
                    f"Stage {stage}/{config.total_stages}: mean return {record.mean_return:.3f}, "
                    f"max {record.max_return:.3f}, best so far {record.best_return:.3f}, "
                    f"loss {record.loss_mean:.3e}"
                )
        except UDRLPGError as e:
            logger.error(f"Run aborted at stage {stage}: {e.detail}")
            partial = self._write_checkpoint(stage) if self.output_dir is not None else None
            raise TrainingAborted(
                f"Run aborted at stage {stage}: {e.detail}",
                stage=stage,
                checkpoint_path=str(partial) if partial else None,
            ) from e
        finally:
            if executor is not None:
                executor.shutdown(wait=True)

        logger.info(f"Run finished: best return {self.best_return:.3f} after {self.env_steps} env steps")
        return TrainingResult(
            config=config,
            generator=self.generator,
            norm=self.norm,
            buffer=self.buffer,
            run_log=self.run_log,
            inserted_commands=self.inserted_commands,
            checkpoint_path=latest,
            contract=self.contract,
        )


def train(
    config: RunConfig, output_dir: Optional[Path] = None, keep_stage_checkpoints: bool = True
) -> TrainingResult:
    return UDRLPGTrainer(config, output_dir, keep_stage_checkpoints).train()


def evaluation_seed(seed: int, episode: int) -> np.random.SeedSequence:
    return derive_seed(seed, SEED_EVALUATE, 0, episode)


def evaluate(checkpoint: Checkpoint, command: float, episodes: int, seed: int) -> Tuple[float, List[float]]:
    """
    Mean return of the generated policy for `command`, without exploration
    noise. The checkpoint's normalizer is copied, never mutated.
    """
    if episodes < 1:
        raise ConfigurationError(f"episodes must be >= 1, got {episodes}")
    config = checkpoint.config
    env = get_environment(config.env.name, config.env.constants)
    contract = env.contract
    theta = checkpoint.generator.generate(command)
    policy = Policy(theta, contract.action_low, contract.action_high)

    norm = checkpoint.norm.copy()
    returns = [
        rollout(env, policy, norm, evaluation_seed(seed, episode)).episode_return
        for episode in range(episodes)
    ]
    return float(np.mean(returns)), returns
