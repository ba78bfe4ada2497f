"""
Experiment harness: identity curves, final-return dispersion over seeds and
the four-way buffer-strategy ablation. Every reported number is computed
from the same floats that go into the raw CSVs.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from ..exceptions import ConfigurationError, UDRLPGError
from ..schemas import BUFFER_STRATEGIES, RunConfig
from .buffer import extrapolation_ceiling
from .checkpoint_service import Checkpoint
from .run_log_service import RUN_LOG_NAME, write_csv, write_run_log
from .trainer import evaluate, train

logger = logging.getLogger(__name__)

IDENTITY_HEADER = ["command", "mean_return", "is_extrapolation"]
VARIANCE_HEADER = ["config", "final_mean", "final_std", "final_min", "final_max"]
SUMMARY_HEADER = ["strategy", "final_mean", "final_std", "final_min", "final_max", "status"]
MIN_SEEDS = 3


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman correlation with average ranks for ties; 0 when either side is all ties."""
    if len(x) != len(y):
        raise ConfigurationError(f"spearman_rho needs equal lengths, got {len(x)} and {len(y)}")
    if len(x) < 2:
        return 0.0
    rank_x = rankdata(x)
    rank_y = rankdata(y)
    dx = rank_x - rank_x.mean()
    dy = rank_y - rank_y.mean()
    denominator = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denominator == 0:
        return 0.0
    return float(np.sum(dx * dy) / denominator)


def dispersion(values: Sequence[float]) -> Dict[str, float]:
    """Mean, sample standard deviation, min and max."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return {"mean": float("nan"), "std": float("nan"), "min": float("nan"), "max": float("nan")}
    return {
        "mean": float(np.mean(values)),
        "std": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
        "min": float(np.min(values)),
        "max": float(np.max(values)),
    }


@dataclass(frozen=True)
class IdentityCurve:
    commands: List[float]
    achieved: List[float]
    spearman_rho: float
    extrapolation_command: float
    extrapolation_achieved: float

    def csv_rows(self) -> List[List[str]]:
        rows = [[repr(c), repr(a), "0"] for c, a in zip(self.commands, self.achieved)]
        rows.append([repr(self.extrapolation_command), repr(self.extrapolation_achieved), "1"])
        return rows


def identity_curve(
    checkpoint: Checkpoint, n_commands: int, episodes: int = 10, seed: int = 0
) -> IdentityCurve:
    """
    Achieved mean return for commands spread evenly over the known return
    range, plus one zero-shot probe above it reported separately.
    """
    if n_commands < 2:
        raise ConfigurationError(f"identity_curve needs n_commands >= 2, got {n_commands}")
    command_norm = checkpoint.generator.command_norm
    commands = np.linspace(command_norm.r_min, command_norm.r_max, n_commands).tolist()

    achieved = []
    for command in commands:
        mean_return, _ = evaluate(checkpoint, command, episodes, seed)
        achieved.append(mean_return)
        logger.info(f"Identity curve: command {command:.4g} -> mean return {mean_return:.4g}")

    extrapolation = extrapolation_ceiling(command_norm.r_min, command_norm.r_max)
    extrapolation_achieved, _ = evaluate(checkpoint, extrapolation, episodes, seed)

    return IdentityCurve(
        commands=commands,
        achieved=achieved,
        spearman_rho=spearman_rho(commands, achieved),
        extrapolation_command=extrapolation,
        extrapolation_achieved=extrapolation_achieved,
    )


def _run_seed(config: RunConfig, seed: int, run_dir: Optional[Path]) -> List[float]:
    """Train one seed and return its per-stage mean rollout returns."""
    result = train(config.with_overrides(seed=seed), run_dir, keep_stage_checkpoints=False)
    if run_dir is not None:
        write_run_log(result.run_log, run_dir / RUN_LOG_NAME)
    return [record.mean_return for record in result.run_log.records]


@dataclass
class DispersionReport:
    label: str
    seeds: List[int]
    final_returns: List[float]
    summary: Dict[str, float] = field(default_factory=dict)

    def csv_row(self) -> List[str]:
        s = self.summary
        return [self.label, repr(s["mean"]), repr(s["std"]), repr(s["min"]), repr(s["max"])]


def final_variance(
    configs: Union[Dict[str, RunConfig], Sequence[RunConfig]],
    seeds: Sequence[int],
    output_dir: Optional[Union[str, Path]] = None,
) -> List[DispersionReport]:
    """Dispersion of the last-stage mean rollout return over seeds, per config."""
    if len(seeds) < MIN_SEEDS:
        raise ConfigurationError(f"final_variance needs at least {MIN_SEEDS} seeds, got {len(seeds)}")
    if not isinstance(configs, dict):
        configs = {f"config_{i}": config for i, config in enumerate(configs)}
    output_dir = Path(output_dir) if output_dir is not None else None

    reports = []
    for label, config in configs.items():
        finals = []
        for seed in seeds:
            run_dir = output_dir / label / f"seed_{seed}" if output_dir is not None else None
            curve = _run_seed(config, seed, run_dir)
            finals.append(curve[-1] if curve else float("nan"))
        report = DispersionReport(label=label, seeds=list(seeds), final_returns=finals, summary=dispersion(finals))
        logger.info(
            f"Final returns for {label}: mean {report.summary['mean']:.4g}, std {report.summary['std']:.4g}"
        )
        reports.append(report)

    if output_dir is not None:
        write_csv(output_dir / "variance.csv", VARIANCE_HEADER, [report.csv_row() for report in reports])
    return reports


@dataclass
class StrategyCurve:
    """Per-stage mean rollout return of every seed for one buffer strategy."""

    strategy: str
    seeds: List[int]
    per_seed: List[List[float]]

    @property
    def n_stages(self) -> int:
        return len(self.per_seed[0]) if self.per_seed else 0

    def stage_values(self, stage_index: int) -> List[float]:
        return [curve[stage_index] for curve in self.per_seed]

    def csv_header(self) -> List[str]:
        return ["stage"] + [f"seed_{seed}" for seed in self.seeds] + ["mean", "std"]

    def csv_rows(self) -> List[List[str]]:
        rows = []
        for index in range(self.n_stages):
            values = self.stage_values(index)
            stats = dispersion(values)
            rows.append([str(index + 1)] + [repr(v) for v in values] + [repr(stats["mean"]), repr(stats["std"])])
        return rows

    def final_summary(self) -> Dict[str, float]:
        return dispersion(self.stage_values(self.n_stages - 1) if self.n_stages else [])


@dataclass
class AblationReport:
    curves: Dict[str, StrategyCurve] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return not self.failures

    def summary_rows(self) -> List[List[str]]:
        rows = []
        for strategy in BUFFER_STRATEGIES:
            if strategy in self.curves:
                s = self.curves[strategy].final_summary()
                rows.append([strategy, repr(s["mean"]), repr(s["std"]), repr(s["min"]), repr(s["max"]), "ok"])
            elif strategy in self.failures:
                rows.append([strategy, "", "", "", "", "failed"])
        return rows


def ablation(
    base_config: RunConfig,
    seeds: Sequence[int],
    output_dir: Optional[Union[str, Path]] = None,
) -> AblationReport:
    """
    Train every buffer strategy on the same seeds with otherwise identical
    configs. A failing strategy is recorded and the others still run.
    """
    if len(seeds) < MIN_SEEDS:
        raise ConfigurationError(f"ablation needs at least {MIN_SEEDS} seeds, got {len(seeds)}")
    output_dir = Path(output_dir) if output_dir is not None else None
    report = AblationReport()

    for strategy in BUFFER_STRATEGIES:
        config = base_config.with_overrides(strategy=strategy)
        try:
            per_seed = []
            for seed in seeds:
                run_dir = output_dir / strategy / f"seed_{seed}" if output_dir is not None else None
                per_seed.append(_run_seed(config, seed, run_dir))
        except UDRLPGError as e:
            logger.warning(f"Ablation strategy {strategy} failed: {e.detail}")
            report.failures[strategy] = e.detail
            continue

        curve = StrategyCurve(strategy=strategy, seeds=list(seeds), per_seed=per_seed)
        report.curves[strategy] = curve
        if output_dir is not None:
            write_csv(output_dir / f"ablation_{strategy}.csv", curve.csv_header(), curve.csv_rows())

    if output_dir is not None:
        write_csv(output_dir / "ablation_summary.csv", SUMMARY_HEADER, report.summary_rows())
    return report
