"""
Flags and config resolution shared by the training commands.
"""

from pathlib import Path
from typing import List, Optional

from django.conf import settings
from django.core.management.base import CommandError

from policy_generators.exceptions import UDRLPGError
from policy_generators.schemas import RunConfig, load_run_config


def add_config_arguments(parser, seeds: bool = False):
    parser.add_argument(
        "--config",
        type=str,
        required=True,
        help="Path to a TOML run config (relative paths are also looked up in the configs/ directory)",
    )
    if seeds:
        parser.add_argument(
            "--seeds",
            type=str,
            required=True,
            help="Comma-separated master seeds, at least three (e.g., --seeds 0,1,2)",
        )
    else:
        parser.add_argument("--seed", type=int, help="Master seed (overrides the config)")
    parser.add_argument("--output-dir", type=str, help="Output directory (overrides the config)")
    parser.add_argument("--workers", type=int, help="Rollout worker threads (overrides the config)")
    parser.add_argument("--stages", type=int, help="Number of training stages (overrides the config)")


def resolve_config_path(path: str) -> Path:
    candidate = Path(path)
    if not candidate.exists() and not candidate.is_absolute():
        bundled = Path(settings.UDRLPG_CONFIG_DIR) / candidate
        if bundled.exists():
            return bundled
    return candidate


def resolve_output_dir(path: str) -> Path:
    output_dir = Path(path)
    if not output_dir.is_absolute():
        output_dir = Path(settings.UDRLPG_OUTPUT_ROOT) / output_dir
    return output_dir


def load_config(options) -> RunConfig:
    """Load the TOML config and apply command-line overrides."""
    workers = options.get("workers")
    if workers is not None:
        workers = min(workers, settings.UDRLPG_MAX_WORKERS)
    try:
        config = load_run_config(resolve_config_path(options["config"]))
        return config.with_overrides(
            seed=options.get("seed"),
            output_dir=options.get("output_dir"),
            workers=workers,
            total_stages=options.get("stages"),
        )
    except UDRLPGError as e:
        raise CommandError(e.detail)


def parse_seeds(value: str) -> List[int]:
    try:
        seeds = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise CommandError(f"--seeds must be comma-separated integers, got {value!r}")
    return seeds


def optional_float(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.4f}"
