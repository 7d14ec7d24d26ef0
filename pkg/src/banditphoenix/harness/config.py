"""
Experiment configuration: TOML file, CLI overrides and the parameter
grid.
"""

import itertools
import logging
import os
import tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..errors import ConfigError, PolicyError
from ..policies import POLICY_NAMES, TUNABLE, PolicyConfig

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "BANDITPHOENIX_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"
MODES = ("synthetic", "replay")
METRICS = ("regret", "ctr")

DEFAULT_ALPHAS = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0]
DEFAULT_ALPHA2_SCALES = [1.0, 0.5, 2.0]
DEFAULT_SPLIT_PROBS = [0.1, 0.2, 0.3]


@dataclass
class EnvironmentSpec:
    """[environment] section. ``seed = None`` draws one world per run
    seed; ``spec`` loads a JSON file written by ``make-env``."""

    users: int = 100
    clusters: int = 5
    dimension: int = 10
    gamma: float = 1.0
    sigma: float = 0.1
    context_size: int = 10
    arrivals: str = "uniform"
    power_law_exponent: float = 1.5
    item_pool: int = 0
    cluster_sizes: Optional[List[int]] = None
    seed: Optional[int] = None
    spec: Optional[str] = None


@dataclass
class DatasetSpec:
    """[dataset] section."""

    ratings: Optional[str] = None
    items: Optional[str] = None
    features: Optional[str] = None
    cache: Optional[str] = None
    context_size: int = 25
    variance_fraction: float = 0.95
    seed: int = 0
    max_rounds: Optional[int] = None


@dataclass
class GridSpec:
    """[grid] section; ``alpha2`` lists explicit values, otherwise
    ``alpha2_scale`` multiplies each alpha."""

    alpha: Optional[List[float]] = None
    alpha2: Optional[List[float]] = None
    alpha2_scale: List[float] = field(
        default_factory=lambda: list(DEFAULT_ALPHA2_SCALES)
    )
    split_prob: Optional[List[float]] = None


@dataclass
class ExperimentConfig:
    mode: str = "synthetic"
    policy: str = "club"
    horizon: Optional[int] = None
    train_fraction: float = 0.1
    seeds: List[int] = field(default_factory=lambda: [0])
    metric: str = "regret"
    output: Optional[str] = None
    workers: int = 1
    environment: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    policy_params: Dict[str, Any] = field(default_factory=dict)
    grid: GridSpec = field(default_factory=GridSpec)

    @property
    def output_path(self) -> Path:
        if self.output:
            return Path(self.output)
        base = os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)
        return Path(base) / f"{self.policy}_{self.mode}.csv"

    def policy_config(
        self, point: Dict[str, float], horizon: int, dimension: int, seed: int
    ) -> PolicyConfig:
        """PolicyConfig for one grid point."""
        return PolicyConfig(
            horizon=horizon,
            dimension=dimension,
            seed=seed,
            **{**self.policy_params, **point},
        )

    def grid_points(self) -> List[Dict[str, float]]:
        """
        Parameter settings tried during tuning, in grid order.

        Only the parameters the policy reads are gridded; a value pinned
        in [policy] is not gridded unless [grid] lists it.
        """
        tunable = TUNABLE[self.policy]

        def values(name: str, default: List[float]) -> List[float]:
            listed = getattr(self.grid, name)
            if listed is not None:
                return list(listed)
            if name in self.policy_params:
                return [self.policy_params[name]]
            return list(default)

        alphas = values("alpha", DEFAULT_ALPHAS) if "alpha" in tunable else []
        axes: List[List[Tuple[str, float]]] = []
        if alphas:
            axes.append([("alpha", a) for a in alphas])
        if "split_prob" in tunable:
            probs = values("split_prob", DEFAULT_SPLIT_PROBS)
            axes.append([("split_prob", p) for p in probs])

        points = []
        for combo in itertools.product(*axes):
            point = dict(combo)
            if "alpha2" in tunable:
                for alpha2 in self._alpha2_values(point["alpha"]):
                    points.append({**point, "alpha2": alpha2})
            else:
                points.append(point)
        return points

    def _alpha2_values(self, alpha: float) -> List[float]:
        if self.grid.alpha2 is not None:
            return list(self.grid.alpha2)
        if "alpha2" in self.policy_params:
            return [self.policy_params["alpha2"]]
        return [scale * alpha for scale in self.grid.alpha2_scale]

    def validate(self) -> None:
        """
        Raises:
            ConfigError: naming the first invalid setting
        """
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode}")
        if self.policy not in POLICY_NAMES:
            raise ConfigError(
                f"Unknown policy '{self.policy}'; expected one of "
                f"{', '.join(POLICY_NAMES)}"
            )
        if self.metric not in METRICS:
            raise ConfigError(
                f"metric must be one of {METRICS}, got {self.metric}"
            )
        if self.metric == "ctr" and self.mode != "replay":
            raise ConfigError("metric 'ctr' needs binary payoffs (replay)")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {self.seeds}")
        if any(not isinstance(s, int) or s < 0 for s in self.seeds):
            raise ConfigError(
                f"seeds must be non-negative integers, got {self.seeds}"
            )
        if self.horizon is not None and self.horizon < 2:
            raise ConfigError(f"horizon must be at least 2, got {self.horizon}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")
        if (
            self.mode == "synthetic"
            and self.policy.startswith("ucb")
            and not (self.environment.item_pool or self.environment.spec)
        ):
            raise ConfigError(
                f"{self.policy} needs item ids: set environment.item_pool"
            )
        if self.mode == "replay" and not (
            self.dataset.ratings or self.dataset.cache
        ):
            raise ConfigError("replay mode needs dataset.ratings or .cache")

        for name in ("alpha", "alpha2", "alpha2_scale", "split_prob"):
            listed = getattr(self.grid, name)
            if listed is not None and not listed:
                raise ConfigError(f"grid.{name} must not be empty")

        points = self.grid_points()
        try:
            for point in points or [{}]:
                PolicyConfig(**{**self.policy_params, **point})
        except (PolicyError, TypeError) as e:
            raise ConfigError(f"Invalid policy parameters: {e}") from e


_SECTIONS = {
    "environment": EnvironmentSpec,
    "dataset": DatasetSpec,
    "grid": GridSpec,
}
_EXPERIMENT_KEYS = {
    f.name
    for f in fields(ExperimentConfig)
    if f.name not in ("environment", "dataset", "policy_params", "grid")
}
_POLICY_KEYS = {
    "alpha",
    "alpha2",
    "split_prob",
    "cold_start_fraction",
    "graph",
    "graph_density",
}


def _check_keys(section: str, given: Dict[str, Any], allowed) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown key '{section}.{unknown[0]}'")


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    """Build an (unvalidated) config from parsed TOML tables."""
    allowed = {"experiment", "policy", *_SECTIONS}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"Unknown section '[{unknown[0]}]'")

    experiment = dict(raw.get("experiment", {}))
    _check_keys("experiment", experiment, _EXPERIMENT_KEYS)
    policy_params = dict(raw.get("policy", {}))
    _check_keys("policy", policy_params, _POLICY_KEYS)

    sections = {}
    for name, cls in _SECTIONS.items():
        table = dict(raw.get(name, {}))
        _check_keys(name, table, {f.name for f in fields(cls)})
        sections[name] = cls(**table)

    return ExperimentConfig(
        **experiment, policy_params=policy_params, **sections
    )


def load_config(
    path: Union[str, Path],
    policy: Optional[str] = None,
    seeds: Optional[List[int]] = None,
    output: Optional[str] = None,
) -> ExperimentConfig:
    """
    Read a TOML experiment file and apply CLI overrides.

    Args:
        path: Config file
        policy: Overrides experiment.policy
        seeds: Overrides experiment.seeds
        output: Overrides experiment.output

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: on unreadable files, unknown keys or bad values
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {path}: {e}") from e

    cfg = config_from_dict(raw)
    if policy is not None:
        cfg.policy = policy
    if seeds:
        cfg.seeds = list(seeds)
    if output is not None:
        cfg.output = output
    cfg.validate()

    logger.info(
        f"Loaded config {path}: mode={cfg.mode}, policy={cfg.policy}, "
        f"seeds={cfg.seeds}"
    )
    return cfg
