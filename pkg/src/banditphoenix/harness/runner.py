"""
Experiment runner: paired round streams, per-seed simulation, grid
tuning on a training prefix and seed averaging.
"""

import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.metrics import adjusted_rand_score

from ..bandit.models import ContextSet
from ..data import (
    InteractionLog,
    ItemFeatureTable,
    ReplayRound,
    binarize_payoffs,
    build_context_sets,
    load_feature_matrix,
    load_item_features,
    load_movielens,
    pca_standardize,
    replay_regret,
)
from ..database import ReplayCache
from ..environment import SyntheticEnv, load_env_spec, make_env
from ..errors import ConfigError, HarnessError, IngestError
from ..policies import (
    ClubPolicy,
    Policy,
    PolicyConfig,
    RoundRecord,
    make_policy,
)
from ..utils.helpers import StreamChecksum, file_fingerprint
from .config import DatasetSpec, ExperimentConfig

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 1000
# mixed into every stream seed so round draws never share a generator
# with policy randomness seeded by the same integer
STREAM_TAG = 7919


class SyntheticStream:
    """The first ``horizon`` rounds of a synthetic world for one seed.

    Users, contexts and noise are drawn up front, so every policy run on
    the same seed sees the same rounds.
    """

    def __init__(self, env: SyntheticEnv, seed: int, horizon: int):
        self.env = env
        rng = np.random.default_rng([seed, STREAM_TAG])
        users, vectors, ids = [], [], []
        noise = np.empty(horizon)
        for t in range(horizon):
            user, ctx = env.sample_round(t, rng)
            users.append(user)
            vectors.append(ctx.vectors)
            ids.append(ctx.item_ids)
            noise[t] = env.draw_noise(rng)
        self.users = np.asarray(users, dtype=np.int64)
        self.vectors = vectors
        self.item_ids = ids
        self.noise = noise

    def __len__(self) -> int:
        return int(self.users.shape[0])

    def context(self, t: int, local_t: int) -> Tuple[int, ContextSet]:
        return int(self.users[t]), ContextSet(
            vectors=self.vectors[t], round=local_t, item_ids=self.item_ids[t]
        )

    def hidden(self, t: int) -> np.ndarray:
        return self.noise[t : t + 1]

    def feedback(
        self, t: int, user: int, ctx: ContextSet, chosen: int
    ) -> Tuple[float, float, bool]:
        """Payoff, instant regret and whether the payoff was clamped."""
        means = self.env.expected_payoffs(user, ctx.vectors)
        regret = max(0.0, float(means.max() - means[chosen]))
        raw = float(means[chosen]) + float(self.noise[t])
        payoff = min(1.0, max(-1.0, raw))
        return payoff, regret, payoff != raw


class ReplayStream:
    """Logged rounds scored against their logged positives."""

    def __init__(
        self, rounds: Sequence[ReplayRound], features: ItemFeatureTable
    ):
        self.rounds = rounds
        self.features = features

    def __len__(self) -> int:
        return len(self.rounds)

    def context(self, t: int, local_t: int) -> Tuple[int, ContextSet]:
        replay_round = self.rounds[t]
        return replay_round.user, replay_round.context(self.features, local_t)

    def hidden(self, t: int) -> np.ndarray:
        return self.rounds[t].payoffs

    def feedback(
        self, t: int, user: int, ctx: ContextSet, chosen: int
    ) -> Tuple[float, float, bool]:
        replay_round = self.rounds[t]
        return (
            float(replay_round.payoffs[chosen]),
            replay_regret(replay_round, chosen),
            False,
        )


Stream = Union[SyntheticStream, ReplayStream]


@dataclass
class World:
    """Everything a run needs to rebuild its stream."""

    n_users: int
    dimension: int
    horizon: int
    env: Optional[SyntheticEnv] = None
    rounds: Optional[List[ReplayRound]] = None
    features: Optional[ItemFeatureTable] = None

    def stream(self, seed: int, stop: int) -> Stream:
        if self.env is not None:
            return SyntheticStream(self.env, seed, stop)
        if self.rounds is None or self.features is None:
            raise HarnessError("World has neither environment nor rounds")
        return ReplayStream(self.rounds, self.features)


@dataclass
class SeedTrace:
    """Per-round outcome of one policy on one seed over [start, stop)."""

    policy: str
    seed: int
    start: int
    stop: int
    payoffs: np.ndarray
    regrets: np.ndarray
    cluster_counts: np.ndarray
    checksum: str
    clamped: int = 0
    agreement: Optional[float] = None

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.regrets)

    @property
    def cumulative_payoff(self) -> np.ndarray:
        return np.cumsum(self.payoffs)

    def curve(self, metric: str) -> np.ndarray:
        if metric == "ctr":
            return self.cumulative_payoff
        return self.cumulative_regret

    @property
    def ctr(self) -> float:
        return float(self.payoffs.mean()) if self.payoffs.size else 0.0


@dataclass
class MetricTrace:
    """Seed-averaged curves of a policy and of RAN on the same rounds."""

    metric: str
    rounds: np.ndarray
    cumulative: np.ndarray
    ran_cumulative: np.ndarray
    cluster_counts: np.ndarray
    summary: Dict[str, Any] = field(default_factory=dict)
    per_seed: List[SeedTrace] = field(default_factory=list)
    ran_per_seed: List[SeedTrace] = field(default_factory=list)
    tuning: List[Tuple[Dict[str, float], float]] = field(default_factory=list)

    @classmethod
    def empty(cls, metric: str = "regret") -> "MetricTrace":
        nothing = np.zeros(0)
        return cls(
            metric=metric,
            rounds=np.zeros(0, dtype=np.int64),
            cumulative=nothing,
            ran_cumulative=nothing.copy(),
            cluster_counts=nothing.copy(),
        )

    @property
    def ratio(self) -> np.ndarray:
        """Per-round ratio of the policy curve to RAN's; nan where RAN's
        curve is still zero."""
        out = np.full(self.cumulative.shape, np.nan)
        np.divide(
            self.cumulative,
            self.ran_cumulative,
            out=out,
            where=self.ran_cumulative != 0,
        )
        return out


def partition_agreement(labels: Sequence[int], truth: Sequence[int]) -> float:
    """Adjusted Rand index of a learned partition against the true one."""
    return float(adjusted_rand_score(np.asarray(truth), np.asarray(labels)))


def simulate(
    policy: Policy,
    stream: Stream,
    start: int,
    stop: int,
    seed: int = 0,
    truth: Optional[np.ndarray] = None,
) -> SeedTrace:
    """
    Run a policy over rounds [start, stop) of a stream.

    Round numbers seen by the policy restart at 0.

    Args:
        policy: Fresh policy
        stream: Round source
        start: First round
        stop: One past the last round
        seed: Recorded on the trace
        truth: True cluster labels, for the agreement score

    Returns:
        SeedTrace
    """
    if not 0 <= start <= stop <= len(stream):
        raise HarnessError(
            f"Window [{start}, {stop}) outside a stream of {len(stream)}"
        )
    length = stop - start
    payoffs = np.empty(length)
    regrets = np.empty(length)
    counts = np.empty(length, dtype=np.int64)
    checksum = StreamChecksum()
    clamped = 0

    for offset, t in enumerate(range(start, stop)):
        user, ctx = stream.context(t, offset)
        checksum.add(user, ctx.vectors, stream.hidden(t))
        chosen, hook = policy.step(user, ctx)
        payoff, regret, was_clamped = stream.feedback(t, user, ctx, chosen)
        hook(payoff)
        record = RoundRecord(
            round=t,
            user=user,
            chosen=chosen,
            payoff=payoff,
            instant_regret=regret,
            cluster_count=policy.cluster_count,
        )
        payoffs[offset] = record.payoff
        regrets[offset] = record.instant_regret
        counts[offset] = record.cluster_count
        clamped += was_clamped

    agreement = None
    if truth is not None and isinstance(policy, ClubPolicy):
        agreement = partition_agreement(policy.graph.cluster_index, truth)

    return SeedTrace(
        policy=policy.name,
        seed=seed,
        start=start,
        stop=stop,
        payoffs=payoffs,
        regrets=regrets,
        cluster_counts=counts,
        checksum=checksum.hexdigest(),
        clamped=clamped,
        agreement=agreement,
    )


@dataclass(frozen=True)
class RunJob:
    policy: str
    config: PolicyConfig
    world: World
    seed: int
    start: int
    stop: int


def run_job(job: RunJob) -> SeedTrace:
    """Build a policy and its stream, then simulate one window."""
    policy = make_policy(job.policy, job.world.n_users, job.config)
    stream = job.world.stream(job.seed, job.stop)
    truth = None if job.world.env is None else job.world.env.partition()
    return simulate(policy, stream, job.start, job.stop, job.seed, truth)


def _map(jobs: List[RunJob], workers: int) -> List[SeedTrace]:
    if workers == 1 or len(jobs) < 2:
        return [run_job(job) for job in jobs]
    with Pool(processes=min(workers, len(jobs))) as pool:
        return pool.map(run_job, jobs)


def _score(trace: SeedTrace, metric: str) -> float:
    """Higher is better."""
    if metric == "ctr":
        return trace.ctr
    return -float(trace.regrets.sum())


def _fingerprint(spec: DatasetSpec) -> Optional[str]:
    if not spec.ratings:
        return None
    extra: List[Any] = [
        spec.context_size,
        spec.variance_fraction,
        spec.seed,
        spec.max_rounds,
    ]
    for path in (spec.items, spec.features):
        extra.append(file_fingerprint(path) if path else None)
    return file_fingerprint(spec.ratings, *extra)


@dataclass
class ReplayData:
    rounds: List[ReplayRound]
    features: ItemFeatureTable
    log: Optional[InteractionLog] = None
    from_cache: bool = False

    @property
    def n_users(self) -> int:
        if self.log is not None:
            return self.log.n_users
        return 1 + max((r.user for r in self.rounds), default=0)


def build_replay(spec: DatasetSpec) -> ReplayData:
    """Ingest a rating log into replay rounds."""
    if not spec.ratings:
        raise IngestError("dataset.ratings is not set")
    log = binarize_payoffs(load_movielens(spec.ratings))
    if spec.features:
        raw = load_feature_matrix(spec.features, log)
    elif spec.items:
        raw = load_item_features(spec.items, log)
    else:
        raise IngestError("Replay needs dataset.items or dataset.features")
    table = pca_standardize(raw, spec.variance_fraction, seed=spec.seed)
    rounds = build_context_sets(
        log, table, spec.context_size, spec.seed, spec.max_rounds
    )
    return ReplayData(rounds=rounds, features=table, log=log)


def prepare_replay(spec: DatasetSpec) -> ReplayData:
    """
    Replay rounds from the cache when it matches the dataset files,
    otherwise from a fresh ingest that is then cached.
    """
    fingerprint = _fingerprint(spec)
    if spec.cache and (fingerprint is None or Path(spec.cache).exists()):
        with ReplayCache(spec.cache) as cache:
            if fingerprint is None or cache.is_fresh(fingerprint):
                rounds, features = cache.load()
                return ReplayData(rounds, features, from_cache=True)
        logger.warning(f"Replay cache {spec.cache} is stale; rebuilding")

    data = build_replay(spec)
    if spec.cache and fingerprint is not None:
        with ReplayCache(spec.cache) as cache:
            cache.store(data.rounds, data.features, fingerprint)
    return data


def build_worlds(cfg: ExperimentConfig) -> Dict[int, World]:
    """One world per seed; replay worlds are shared by all seeds."""
    if cfg.mode == "replay":
        data = prepare_replay(cfg.dataset)
        horizon = len(data.rounds)
        if cfg.horizon is not None:
            horizon = min(horizon, cfg.horizon)
        world = World(
            n_users=data.n_users,
            dimension=data.features.dimension,
            horizon=horizon,
            rounds=data.rounds,
            features=data.features,
        )
        return {seed: world for seed in cfg.seeds}

    spec = cfg.environment
    horizon = cfg.horizon or DEFAULT_HORIZON
    shared = load_env_spec(spec.spec) if spec.spec else None
    worlds = {}
    for seed in cfg.seeds:
        env = shared or make_env(
            n=spec.users,
            m=spec.clusters,
            d=spec.dimension,
            gamma=spec.gamma,
            sigma=spec.sigma,
            cluster_sizes=spec.cluster_sizes,
            seed=seed if spec.seed is None else spec.seed,
            context_size=spec.context_size,
            arrivals=spec.arrivals,
            power_law_exponent=spec.power_law_exponent,
            item_pool=spec.item_pool,
        )
        worlds[seed] = World(
            n_users=env.n_users,
            dimension=env.dimension,
            horizon=horizon,
            env=env,
        )
    return worlds


def tune(
    cfg: ExperimentConfig, world: World, seed: int, n_train: int
) -> Tuple[Dict[str, float], List[Tuple[Dict[str, float], float]]]:
    """
    Grid search on rounds [0, n_train) of the first seed.

    Returns:
        The winning point (first in grid order on ties) and every
        point's prefix score
    """
    points = cfg.grid_points()
    if len(points) == 1:
        return points[0], []
    jobs = [
        RunJob(
            cfg.policy,
            cfg.policy_config(point, n_train, world.dimension, seed),
            world,
            seed,
            0,
            n_train,
        )
        for point in points
    ]
    traces = _map(jobs, cfg.workers)
    if any(trace.stop > n_train for trace in traces):
        raise HarnessError("Tuning run reached into the test rounds")
    scores = [_score(trace, cfg.metric) for trace in traces]
    best = int(np.argmax(scores))
    logger.info(f"Tuned {cfg.policy}: {points[best]} (score {scores[best]})")
    return points[best], list(zip(points, scores))


def run_experiment(cfg: ExperimentConfig) -> MetricTrace:
    """
    Tune on the training prefix, then run the tuned policy and RAN on
    the remaining rounds of every seed and average.

    Raises:
        ConfigError: if the horizon leaves no training or test rounds
        HarnessError: if a policy and RAN saw different rounds
    """
    cfg.validate()
    worlds = build_worlds(cfg)
    first = cfg.seeds[0]
    horizon = worlds[first].horizon
    n_train = int(cfg.train_fraction * horizon)
    if not 0 < n_train < horizon:
        raise ConfigError(
            f"train_fraction {cfg.train_fraction} of {horizon} rounds "
            f"leaves no training or no test rounds"
        )
    logger.info(
        f"Running {cfg.policy} ({cfg.mode}): {horizon} rounds, "
        f"tuning on [0, {n_train}), testing on [{n_train}, {horizon}), "
        f"seeds {cfg.seeds}"
    )

    tuned, tuning = tune(cfg, worlds[first], first, n_train)
    test_len = horizon - n_train
    jobs = []
    for seed in cfg.seeds:
        world = worlds[seed]
        jobs.append(
            RunJob(
                cfg.policy,
                cfg.policy_config(tuned, test_len, world.dimension, seed),
                world,
                seed,
                n_train,
                horizon,
            )
        )
        jobs.append(
            RunJob(
                "ran",
                PolicyConfig(
                    horizon=test_len, dimension=world.dimension, seed=seed
                ),
                world,
                seed,
                n_train,
                horizon,
            )
        )
    traces = _map(jobs, cfg.workers)
    per_seed, ran_per_seed = traces[0::2], traces[1::2]

    for ours, ran in zip(per_seed, ran_per_seed):
        if ours.checksum != ran.checksum:
            raise HarnessError(
                f"Seed {ours.seed}: {cfg.policy} and RAN saw different rounds"
            )
        if ours.start != n_train or ran.start != n_train:
            raise HarnessError("Test run overlaps the tuning rounds")

    trace = MetricTrace(
        metric=cfg.metric,
        rounds=np.arange(n_train, horizon),
        cumulative=np.mean([t.curve(cfg.metric) for t in per_seed], axis=0),
        ran_cumulative=np.mean(
            [t.curve(cfg.metric) for t in ran_per_seed], axis=0
        ),
        cluster_counts=np.mean([t.cluster_counts for t in per_seed], axis=0),
        per_seed=per_seed,
        ran_per_seed=ran_per_seed,
        tuning=tuning,
    )
    trace.summary = summarize(cfg, trace, tuned, n_train, horizon)

    clamped = sum(t.clamped for t in per_seed)
    if clamped:
        logger.warning(f"{clamped} payoffs were clamped to [-1, 1]")
    return trace


def summarize(
    cfg: ExperimentConfig,
    trace: MetricTrace,
    tuned: Dict[str, float],
    n_train: int,
    horizon: int,
) -> Dict[str, Any]:
    """Final numbers of a run, in a fixed key order."""
    regret = float(np.mean([t.regrets.sum() for t in trace.per_seed]))
    ran_regret = float(np.mean([t.regrets.sum() for t in trace.ran_per_seed]))
    summary: Dict[str, Any] = {
        "policy": cfg.policy,
        "mode": cfg.mode,
        "metric": cfg.metric,
        "seeds": " ".join(str(s) for s in cfg.seeds),
        "train_rounds": f"0:{n_train}",
        "test_rounds": f"{n_train}:{horizon}",
    }
    for name in sorted(tuned):
        summary[f"tuned_{name}"] = tuned[name]
    summary["cumulative_regret"] = regret
    summary["ran_cumulative_regret"] = ran_regret
    summary["regret_ratio"] = regret / ran_regret if ran_regret else None

    if cfg.mode == "replay":
        ctr = float(np.mean([t.ctr for t in trace.per_seed]))
        ran_ctr = float(np.mean([t.ctr for t in trace.ran_per_seed]))
        summary["ctr"] = ctr
        summary["ran_ctr"] = ran_ctr
        summary["ctr_ratio"] = ctr / ran_ctr if ran_ctr else None

    summary["final_clusters"] = (
        float(trace.cluster_counts[-1]) if trace.cluster_counts.size else None
    )
    agreements = [t.agreement for t in trace.per_seed]
    if all(a is not None for a in agreements):
        summary["partition_agreement"] = float(np.mean(agreements))
    return summary
