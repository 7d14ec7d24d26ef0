"""
Statistical end-to-end checks on desk-scale synthetic worlds.

These runs take tens of seconds each; they are marked slow and skipped
with ``-m "not slow"``.
"""

import os
from pathlib import Path

import numpy as np
import pytest

from src.banditphoenix.bandit.models import ContextSet
from src.banditphoenix.data import (
    binarize_payoffs,
    build_context_sets,
    ctr,
    load_item_features,
    load_movielens,
    pca_standardize,
)
from src.banditphoenix.environment import make_env
from src.banditphoenix.harness import (
    EnvironmentSpec,
    ExperimentConfig,
    GridSpec,
    SyntheticStream,
    run_experiment,
    simulate,
)
from src.banditphoenix.policies import PolicyConfig, RandomPolicy, make_policy

ML100K_ENV = "BANDITPHOENIX_ML100K"
SEEDS = range(5)
TUNING_ALPHAS = [0.05, 0.1, 0.2, 0.4]
TUNING_ALPHA2S = [0.4, 0.7, 1.0]


def run(name, env, seed, horizon, **params):
    config = PolicyConfig(
        dimension=env.dimension, horizon=horizon, seed=seed, **params
    )
    policy = make_policy(name, env.n_users, config)
    stream = SyntheticStream(env, seed, horizon)
    return simulate(policy, stream, 0, horizon, seed, env.assignment)


def clustered_env(seed):
    return make_env(
        n=100, m=5, d=10, gamma=1.0, sigma=0.1, seed=seed, context_size=10
    )


@pytest.mark.slow
def test_cluster_recovery():
    """With a complete initial graph CLUB recovers the planted clusters."""
    horizon = 20_000
    recovered = 0
    for seed in SEEDS:
        env = clustered_env(seed)
        club = run(
            "club", env, seed, horizon, alpha=0.2, alpha2=1.0,
            graph="complete",
        )
        ran = run("ran", env, seed, horizon)

        recovered += club.agreement == pytest.approx(1.0)
        assert club.checksum == ran.checksum
        assert club.regrets.sum() / ran.regrets.sum() < 0.9

    assert recovered >= 4


def tuned_regret(policy, seed):
    """Harness run: grid search on the first 10% of rounds, then test."""
    cfg = ExperimentConfig(
        mode="synthetic",
        policy=policy,
        horizon=20_000,
        train_fraction=0.1,
        seeds=[seed],
        environment=EnvironmentSpec(
            users=100, clusters=5, dimension=10, gamma=1.0, sigma=0.1,
            context_size=10,
        ),
        grid=GridSpec(alpha=TUNING_ALPHAS, alpha2=TUNING_ALPHA2S),
    )
    return run_experiment(cfg).summary


@pytest.fixture(scope="module")
def tuned_summaries():
    return {
        seed: {
            name: tuned_regret(name, seed)
            for name in ("club", "linucb-ind", "linucb-one")
        }
        for seed in SEEDS
    }


@pytest.mark.slow
def test_tuned_club_beats_shared_estimator(tuned_summaries):
    wins = 0
    for runs in tuned_summaries.values():
        for summary in runs.values():
            assert summary["regret_ratio"] < 0.9
        wins += (
            runs["club"]["cumulative_regret"]
            < runs["linucb-one"]["cumulative_regret"]
        )
    assert wins >= 4


@pytest.mark.slow
@pytest.mark.xfail(
    strict=False,
    reason=(
        "at n=100, T=2e4 the pooled rounds before deletions settle cost "
        "more than LinUCB-IND's whole regret; see DESIGN.md"
    ),
)
def test_tuned_club_beats_independent(tuned_summaries):
    wins = sum(
        runs["club"]["cumulative_regret"]
        < runs["linucb-ind"]["cumulative_regret"]
        for runs in tuned_summaries.values()
    )
    assert wins >= 4


@pytest.mark.slow
@pytest.mark.xfail(
    strict=False,
    reason="loose stochastic ordering; a failure calls for a closer look",
)
def test_gclub_cold_start_benefit():
    horizon = 30_000
    wins = 0
    for seed in SEEDS:
        env = make_env(
            n=200, m=8, d=10, gamma=0.8, sigma=0.1, seed=seed,
            arrivals="power-law", power_law_exponent=1.5,
        )
        params = dict(alpha=0.2, alpha2=1.0, cold_start_fraction=0.1)
        gclub = run("gclub", env, seed, horizon, split_prob=0.2, **params)
        club = run("club", env, seed, horizon, **params)
        wins += gclub.regrets.sum() <= club.regrets.sum()
    assert wins >= 3


def test_gclub_without_exploration_is_club():
    for seed in range(3):
        env = clustered_env(seed)
        club = run("club", env, seed, 1000, alpha=0.2, split_prob=0.0)
        gclub = run("gclub", env, seed, 1000, alpha=0.2, split_prob=0.0)
        assert np.array_equal(club.payoffs, gclub.payoffs)
        assert np.array_equal(club.regrets, gclub.regrets)
        assert np.array_equal(club.cluster_counts, gclub.cluster_counts)


def test_cluster_count_never_decreases():
    env = clustered_env(7)
    for name in ("club", "gclub"):
        trace = run(
            name, env, 7, 2000, alpha=0.2, split_prob=0.3,
            cold_start_fraction=0.5,
        )
        assert np.all(np.diff(trace.cluster_counts) >= 0)


def test_linucb_one_regret_grows_linearly():
    """One shared estimator cannot serve antipodal clusters."""
    env = make_env(n=10, m=2, d=5, gamma=2.0, sigma=0.0, seed=0)
    trace = run("linucb-one", env, 0, 10_000, alpha=0.2)
    assert trace.regrets.sum() / 10_000 > 0.1


def test_random_choice_is_uniform():
    policy = RandomPolicy(1, PolicyConfig(seed=0))
    ctx = ContextSet(np.eye(25), round=0)
    draws = 100_000
    counts = np.bincount(
        [policy.select(0, ctx) for _ in range(draws)], minlength=25
    )
    p = 1 / 25
    sd = np.sqrt(draws * p * (1 - p))
    # 5 sd per cell keeps the 25-way check from flaking
    assert np.all(np.abs(counts - draws * p) < 5 * sd)


@pytest.mark.slow
@pytest.mark.skipif(
    not os.environ.get(ML100K_ENV),
    reason=f"set {ML100K_ENV} to a directory holding u.data and u.item",
)
def test_movielens_smoke():
    root = Path(os.environ[ML100K_ENV])
    log = load_movielens(root / "u.data")
    assert len(log) == 100_000
    assert log.n_users == 943
    assert log.n_items == 1682

    log = binarize_payoffs(log)
    table = pca_standardize(load_item_features(root / "u.item", log))
    rounds = build_context_sets(log, table, c=25, seed=0)
    assert len(rounds) == 100_000
    assert max(r.size for r in rounds) <= 25

    rng = np.random.default_rng(0)
    payoffs = [r.payoffs[int(rng.integers(r.size))] for r in rounds]
    rate = ctr(payoffs)
    p = 1 / 25
    # early rounds have fewer candidates, so the rate sits slightly above p
    assert rate > p - 3 * np.sqrt(p * (1 - p) / len(rounds))
    assert rate < 1.5 * p
