"""
Synthetic clustered linear-payoff environment.

Users are partitioned into clusters, each cluster holds a unit
parameter vector, and the expected payoff of a context x for user i is
the inner product of x with the vector of i's cluster.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..bandit.models import ContextSet
from ..errors import SyntheticEnvError
from ..utils.helpers import SeedLike, as_generator

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 10_000
ARRIVALS = ("uniform", "power-law")
SPEC_VERSION = 1


def unit_vectors(
    rng: np.random.Generator, count: int, dimension: int
) -> np.ndarray:
    """Rows drawn uniformly on the unit sphere (Gaussian normalize)."""
    vectors = rng.standard_normal((count, dimension))
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    # a zero Gaussian draw has probability zero; guard anyway
    norms[norms == 0.0] = 1.0
    return vectors / norms


@dataclass(frozen=True)
class EnvDiagnostics:
    """Empirical checks on the context process and the partition."""

    min_eigenvalue: float
    cluster_sizes: Tuple[int, ...]
    samples: int


@dataclass
class SyntheticEnv:
    """A clustered linear-payoff world with a regret oracle."""

    params: np.ndarray  # m x d, unit rows
    assignment: np.ndarray  # user -> cluster
    gamma: float
    sigma: float
    context_size: int = 10
    arrivals: str = "uniform"
    power_law_exponent: float = 1.5
    item_pool: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.arrivals not in ARRIVALS:
            raise SyntheticEnvError(f"Unknown arrival mode '{self.arrivals}'")
        self.params = np.atleast_2d(np.asarray(self.params, dtype=float))
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.item_pool is not None:
            self.item_pool = np.atleast_2d(
                np.asarray(self.item_pool, dtype=float)
            )
        self._arrival_probs = self._make_arrival_probs()

    @property
    def n_users(self) -> int:
        return int(self.assignment.shape[0])

    @property
    def m(self) -> int:
        return int(self.params.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.params.shape[1])

    def _make_arrival_probs(self) -> Optional[np.ndarray]:
        if self.arrivals == "uniform":
            return None
        ranks = np.arange(1, self.n_users + 1, dtype=float)
        weights = ranks ** (-self.power_law_exponent)
        return weights / weights.sum()

    def partition(self) -> np.ndarray:
        """True cluster label of every user."""
        return self.assignment.copy()

    def sample_user(self, rng: np.random.Generator) -> int:
        if self._arrival_probs is None:
            return int(rng.integers(self.n_users))
        return int(rng.choice(self.n_users, p=self._arrival_probs))

    def sample_contexts(
        self, rng: np.random.Generator, t: int
    ) -> ContextSet:
        if self.item_pool is None:
            vectors = unit_vectors(rng, self.context_size, self.dimension)
            return ContextSet(vectors=vectors, round=t)
        ids = rng.choice(
            self.item_pool.shape[0], size=self.context_size, replace=False
        )
        return ContextSet(vectors=self.item_pool[ids], round=t, item_ids=ids)

    def sample_round(
        self, t: int, rng: np.random.Generator
    ) -> Tuple[int, ContextSet]:
        """Draw the served user of round t and its context set."""
        user = self.sample_user(rng)
        return user, self.sample_contexts(rng, t)

    def draw_noise(self, rng: np.random.Generator) -> float:
        """Uniform noise on [-sigma*sqrt(3), sigma*sqrt(3)]."""
        if self.sigma == 0.0:
            return 0.0
        half_width = self.sigma * math.sqrt(3.0)
        return float(rng.uniform(-half_width, half_width))

    def expected_payoffs(self, user: int, vectors: np.ndarray) -> np.ndarray:
        return np.atleast_2d(vectors) @ self.params[self.assignment[user]]

    def payoff(
        self,
        user: int,
        x: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        noise: Optional[float] = None,
    ) -> float:
        """
        Noisy payoff clamped to [-1, 1].

        Args:
            user: Served user
            x: Unit context vector
            rng: Noise source, used when ``noise`` is not given
            noise: Pre-drawn noise value

        Returns:
            Observed payoff
        """
        if noise is None:
            if rng is None and self.sigma > 0:
                raise SyntheticEnvError("payoff needs an rng or a noise value")
            noise = 0.0 if rng is None else self.draw_noise(rng)
        raw = float(self.params[self.assignment[user]] @ x) + noise
        return min(1.0, max(-1.0, raw))

    def instant_regret(self, user: int, ctx: ContextSet, chosen: int) -> float:
        """Best expected payoff in the set minus the chosen one's."""
        means = self.expected_payoffs(user, ctx.vectors)
        return max(0.0, float(means.max() - means[chosen]))

    def diagnostics(
        self, samples: int = 100_000, seed: SeedLike = None
    ) -> EnvDiagnostics:
        """
        Estimate the smallest eigenvalue of E[x x^T] over contexts and
        count users per cluster. For the sphere generator the estimate
        approaches 1/d.
        """
        if samples < 1:
            raise SyntheticEnvError(f"samples must be positive, got {samples}")
        rng = as_generator(seed)
        if self.item_pool is None:
            vectors = unit_vectors(rng, samples, self.dimension)
        else:
            rows = rng.integers(self.item_pool.shape[0], size=samples)
            vectors = self.item_pool[rows]
        second_moment = vectors.T @ vectors / samples
        sizes = np.bincount(self.assignment, minlength=self.m)
        return EnvDiagnostics(
            min_eigenvalue=float(np.linalg.eigvalsh(second_moment)[0]),
            cluster_sizes=tuple(int(s) for s in sizes),
            samples=samples,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": SPEC_VERSION,
            "users": self.n_users,
            "clusters": self.m,
            "dimension": self.dimension,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "context_size": self.context_size,
            "arrivals": self.arrivals,
            "power_law_exponent": self.power_law_exponent,
            "seed": self.seed,
            "params": self.params.tolist(),
            "assignment": self.assignment.tolist(),
            "item_pool": (
                None if self.item_pool is None else self.item_pool.tolist()
            ),
        }


def _equal_sizes(n: int, m: int) -> Tuple[int, ...]:
    base, extra = divmod(n, m)
    return tuple(base + (1 if j < extra else 0) for j in range(m))


def _separated_params(
    rng: np.random.Generator, m: int, d: int, gamma: float
) -> np.ndarray:
    if m == 2 and gamma >= 2.0:
        first = unit_vectors(rng, 1, d)[0]
        return np.stack([first, -first])

    accepted = []
    attempts = 0
    while len(accepted) < m:
        attempts += 1
        if attempts > MAX_ATTEMPTS:
            raise SyntheticEnvError(
                f"Could not place {m} unit vectors in dimension {d} with "
                f"pairwise separation {gamma} after {MAX_ATTEMPTS} attempts"
            )
        candidate = unit_vectors(rng, 1, d)[0]
        if all(np.linalg.norm(candidate - u) >= gamma for u in accepted):
            accepted.append(candidate)
    return np.stack(accepted)


def make_env(
    n: int,
    m: int,
    d: int,
    gamma: float,
    sigma: float,
    cluster_sizes: Optional[Sequence[int]] = None,
    seed: Optional[int] = None,
    context_size: int = 10,
    arrivals: str = "uniform",
    power_law_exponent: float = 1.5,
    item_pool: int = 0,
) -> SyntheticEnv:
    """
    Build a synthetic environment.

    Args:
        n: Number of users
        m: Number of clusters
        d: Context dimension
        gamma: Minimum pairwise distance between cluster vectors
        sigma: Noise standard deviation
        cluster_sizes: Users per cluster; equal split when omitted
        seed: Seed for the parameters, assignment and item pool
        context_size: Items offered per round
        arrivals: "uniform" or "power-law"
        power_law_exponent: Exponent of the power-law arrival weights
        item_pool: Size of a fixed item pool with ids; 0 draws fresh
            contexts every round

    Returns:
        SyntheticEnv

    Raises:
        SyntheticEnvError: on invalid arguments or infeasible separation
    """
    if n < 1 or d < 1:
        raise SyntheticEnvError(f"Need n >= 1 and d >= 1, got n={n}, d={d}")
    if not 1 <= m <= n:
        raise SyntheticEnvError(f"Need 1 <= m <= n, got m={m}, n={n}")
    if not 0.0 < gamma <= 2.0:
        raise SyntheticEnvError(f"gamma must lie in (0, 2], got {gamma}")
    if sigma < 0:
        raise SyntheticEnvError(f"sigma must be non-negative, got {sigma}")
    if context_size < 1:
        raise SyntheticEnvError(
            f"context_size must be positive, got {context_size}"
        )
    if arrivals not in ARRIVALS:
        raise SyntheticEnvError(
            f"Unknown arrival mode '{arrivals}'; expected one of {ARRIVALS}"
        )
    if arrivals == "power-law" and power_law_exponent <= 0:
        raise SyntheticEnvError(
            f"power_law_exponent must be positive, got {power_law_exponent}"
        )
    if item_pool and item_pool < context_size:
        raise SyntheticEnvError(
            f"item_pool ({item_pool}) smaller than context_size "
            f"({context_size})"
        )
    sizes = (
        _equal_sizes(n, m)
        if cluster_sizes is None
        else tuple(int(s) for s in cluster_sizes)
    )
    if len(sizes) != m or sum(sizes) != n or min(sizes) < 1:
        raise SyntheticEnvError(
            f"cluster_sizes {sizes} must be {m} positive counts summing to {n}"
        )

    rng = as_generator(seed)
    params = _separated_params(rng, m, d, gamma)
    assignment = rng.permutation(np.repeat(np.arange(m), sizes))
    pool = unit_vectors(rng, item_pool, d) if item_pool else None

    env = SyntheticEnv(
        params=params,
        assignment=assignment,
        gamma=gamma,
        sigma=sigma,
        context_size=context_size,
        arrivals=arrivals,
        power_law_exponent=power_law_exponent,
        item_pool=pool,
        seed=seed,
    )
    logger.info(
        f"Synthetic environment: n={n}, m={m}, d={d}, gamma={gamma}, "
        f"sigma={sigma}, arrivals={arrivals}"
    )
    return env


def write_env_spec(env: SyntheticEnv, path: Union[str, Path]) -> Path:
    """Write the environment as JSON."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8") as fh:
        json.dump(env.to_dict(), fh, indent=2)
    return target


def load_env_spec(path: Union[str, Path]) -> SyntheticEnv:
    """
    Rebuild an environment written by write_env_spec.

    Raises:
        SyntheticEnvError: if the file is unreadable or inconsistent
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise SyntheticEnvError(
            f"Cannot read environment spec {path}: {e}"
        ) from e

    if spec.get("version") != SPEC_VERSION:
        raise SyntheticEnvError(
            f"Unsupported environment spec version {spec.get('version')}"
        )
    try:
        env = SyntheticEnv(
            params=np.asarray(spec["params"], dtype=float),
            assignment=np.asarray(spec["assignment"], dtype=np.int64),
            gamma=float(spec["gamma"]),
            sigma=float(spec["sigma"]),
            context_size=int(spec["context_size"]),
            arrivals=spec["arrivals"],
            power_law_exponent=float(spec["power_law_exponent"]),
            item_pool=(
                None
                if spec["item_pool"] is None
                else np.asarray(spec["item_pool"], dtype=float)
            ),
            seed=spec["seed"],
        )
    except KeyError as e:
        raise SyntheticEnvError(f"Environment spec is missing {e}") from e

    if env.m != spec["clusters"] or env.n_users != spec["users"]:
        raise SyntheticEnvError(f"Environment spec {path} is inconsistent")
    return env
