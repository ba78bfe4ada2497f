import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from ..exceptions import CheckpointError, UDRLPGError
from ..schemas import RunConfig
from .generator import Generator
from .policy import Policy, RunningNorm

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "udrlpg-checkpoint"
CHECKPOINT_VERSION = 1
LATEST_NAME = "checkpoint_latest.json"


@dataclass
class Checkpoint:
    """
    Generator, shared observation normalizer, config echo and stage index.
    best_policy is the highest-return policy in the buffer when the checkpoint
    was taken, stored as a standalone fragment with the normalizer it acts under.
    """

    generator: Generator
    norm: RunningNorm
    config: RunConfig
    stage: int
    best_policy: Optional[Policy] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "stage": self.stage,
            "generator": self.generator.to_fragment(),
            "norm": self.norm.to_dict(),
            "config": self.config.model_dump(mode="json"),
            "best_policy": None if self.best_policy is None else self.best_policy.to_fragment(self.norm),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Checkpoint":
        if data.get("format") != CHECKPOINT_FORMAT:
            raise CheckpointError(f"Not a checkpoint record (format={data.get('format')!r})")
        if data.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"Unsupported checkpoint version {data.get('version')!r}")
        try:
            return cls(
                generator=Generator.from_fragment(data["generator"]),
                norm=RunningNorm.from_dict(data["norm"]),
                config=RunConfig.model_validate(data["config"]),
                stage=int(data["stage"]),
                best_policy=_best_policy(data.get("best_policy")),
            )
        except (KeyError, TypeError, ValueError, ValidationError, UDRLPGError) as e:
            raise CheckpointError(f"Corrupt checkpoint: {e}") from e


def _best_policy(fragment: Optional[Dict[str, Any]]) -> Optional[Policy]:
    if fragment is None:
        return None
    policy, _ = Policy.from_fragment(fragment)
    return policy


def checkpoint_name(stage: int) -> str:
    return f"checkpoint_stage_{stage}.json"


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    """Write atomically: a reader never sees a half-written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with tmp_path.open("w", encoding="utf-8") as handle:
        json.dump(checkpoint.to_dict(), handle)
    os.replace(tmp_path, path)
    logger.info(f"Wrote checkpoint for stage {checkpoint.stage} to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError as e:
        raise CheckpointError(f"Checkpoint not found: {path}") from e
    except json.JSONDecodeError as e:
        raise CheckpointError(f"Checkpoint {path} is not valid JSON: {e}") from e
    return Checkpoint.from_dict(data)
