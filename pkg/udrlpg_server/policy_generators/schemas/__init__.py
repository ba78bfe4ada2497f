from .run_config import (
    BUFFER_STRATEGIES,
    BufferSettings,
    EnvSettings,
    GeneratorSettings,
    OptimizerSettings,
    PolicySettings,
    RunConfig,
    load_run_config,
)

__all__ = [
    "BUFFER_STRATEGIES",
    "BufferSettings",
    "EnvSettings",
    "GeneratorSettings",
    "OptimizerSettings",
    "PolicySettings",
    "RunConfig",
    "load_run_config",
]
