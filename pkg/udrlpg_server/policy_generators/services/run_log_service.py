"""
RunLog output: the per-stage CSV contract and the database copy of each run.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from django.db import transaction

from ..models import StageRecord as StageRecordModel
from ..models import TrainingRun
from ..schemas import RunConfig
from .buffer import SNAPSHOT_HEADER, BucketedBuffer
from .trainer import RUN_LOG_HEADER, RunLog, StageRecord

logger = logging.getLogger(__name__)

RUN_LOG_NAME = "run_log.csv"
BUFFER_SNAPSHOT_NAME = "buffer.csv"


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Sequence[Sequence[object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_run_log(run_log: RunLog, path: Union[str, Path]) -> Path:
    return write_csv(path, RUN_LOG_HEADER, [record.csv_row() for record in run_log.records])


def read_run_log(path: Union[str, Path]) -> RunLog:
    """Parse a run_log.csv back into records (wall time is not stored in the CSV)."""
    run_log = RunLog()
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            occupancy = row["bucket_occupancy"]
            run_log.append(
                StageRecord(
                    stage=int(row["stage"]),
                    env_steps=int(row["env_steps"]),
                    mean_return=float(row["mean_return"]),
                    max_return=float(row["max_return"]),
                    best_return=float(row["best_return"]),
                    loss_mean=float(row["loss_mean"]),
                    bucket_occupancy=tuple(int(c) for c in occupancy.split(";")) if occupancy else (),
                )
            )
    return run_log


def write_buffer_snapshot(buffer: BucketedBuffer, path: Union[str, Path]) -> Path:
    rows: List[Dict[str, object]] = buffer.snapshot_rows()
    return write_csv(path, SNAPSHOT_HEADER, [[row[key] for key in SNAPSHOT_HEADER] for row in rows])


def _finite_or_none(value: float) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def persist_run(
    run_log: RunLog,
    config: RunConfig,
    checkpoint_path: Optional[Union[str, Path]] = None,
    output_dir: Optional[Union[str, Path]] = None,
    env_steps: int = 0,
    aborted_at_stage: Optional[int] = None,
) -> TrainingRun:
    """Store a finished or aborted run and one StageRecord row per RunLog entry."""
    records = run_log.records
    best = max((record.best_return for record in records), default=None)

    with transaction.atomic():
        run = TrainingRun.objects.create(
            env_name=config.env.name,
            strategy=config.buffer.strategy,
            seed=config.seed,
            total_stages=config.total_stages,
            status="aborted" if aborted_at_stage is not None else "completed",
            aborted_at_stage=aborted_at_stage,
            final_mean_return=_finite_or_none(run_log.final_mean_return),
            best_return=_finite_or_none(best),
            env_steps=env_steps,
            config=config.model_dump(mode="json"),
            output_dir=str(output_dir or ""),
            checkpoint_path=str(checkpoint_path or ""),
        )
        StageRecordModel.objects.bulk_create(
            [
                StageRecordModel(
                    run=run,
                    stage=record.stage,
                    env_steps=record.env_steps,
                    mean_return=record.mean_return,
                    max_return=record.max_return,
                    best_return=record.best_return,
                    loss_mean=_finite_or_none(record.loss_mean),
                    bucket_occupancy=list(record.bucket_occupancy),
                    wall_time_seconds=record.wall_time,
                )
                for record in records
            ]
        )

    logger.info(f"Persisted run {run.id} with {len(records)} stage records")
    return run
