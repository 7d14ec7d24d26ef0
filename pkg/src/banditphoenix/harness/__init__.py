"""
BanditPhoenix experiment harness.
Configuration, tuning, paired runs and CSV output.
"""

from .config import (
    OUTPUT_DIR_ENV,
    DatasetSpec,
    EnvironmentSpec,
    ExperimentConfig,
    GridSpec,
    config_from_dict,
    load_config,
)
from .report import column_names, emit_csv
from .runner import (
    MetricTrace,
    ReplayData,
    ReplayStream,
    SeedTrace,
    SyntheticStream,
    World,
    build_replay,
    build_worlds,
    partition_agreement,
    prepare_replay,
    run_experiment,
    simulate,
)

__all__ = [
    "OUTPUT_DIR_ENV",
    "DatasetSpec",
    "EnvironmentSpec",
    "ExperimentConfig",
    "GridSpec",
    "MetricTrace",
    "ReplayData",
    "ReplayStream",
    "SeedTrace",
    "SyntheticStream",
    "World",
    "build_replay",
    "build_worlds",
    "column_names",
    "config_from_dict",
    "emit_csv",
    "load_config",
    "partition_agreement",
    "prepare_replay",
    "run_experiment",
    "simulate",
]
