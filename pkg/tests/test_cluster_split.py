import logging

import numpy as np
import pytest

from src.banditphoenix.bandit.core import build_aggregate, rank_one_update
from src.banditphoenix.bandit.models import BanditState
from src.banditphoenix.errors import SplitError
from src.banditphoenix.graph import (
    UserGraph,
    apply_split,
    bisect_component,
    fiedler_vector,
    init_complete,
    init_sparsified,
    median_split,
)


def two_cliques(size=5):
    """Two complete graphs joined by the single bridge (0, size)."""
    edges = []
    for offset in (0, size):
        nodes = range(offset, offset + size)
        edges.extend((i, j) for i in nodes for j in nodes if i < j)
    edges.append((0, size))
    return UserGraph(2 * size, edges)


def trained_states(n, d=3, seed=0):
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(n):
        state = BanditState.fresh(d)
        for _ in range(5):
            x = rng.standard_normal(d)
            rank_one_update(state, x / np.linalg.norm(x), rng.uniform(-1, 1))
        states.append(state)
    return states


def trained_history(n, d=3, seed=0, rounds=5):
    """Like trained_states, also returning each user's (x, payoff) log."""
    rng = np.random.default_rng(seed)
    states, history = [], []
    for _ in range(n):
        state = BanditState.fresh(d)
        log = []
        for _ in range(rounds):
            x = rng.standard_normal(d)
            x /= np.linalg.norm(x)
            payoff = rng.uniform(-1, 1)
            rank_one_update(state, x, payoff)
            log.append((x, payoff))
        states.append(state)
        history.append(log)
    return states, history


def replay_aggregate(history, members, d=3):
    """Pooled statistics recomputed from the raw served rounds."""
    corr = np.eye(d)
    bias = np.zeros(d)
    for user in members:
        for x, payoff in history[user]:
            corr += np.outer(x, x)
            bias += payoff * x
    return corr, bias


class TestBisectComponent:
    """Tests for planning a cluster bisection."""

    def test_two_cliques_cut_at_bridge(self):
        graph = two_cliques()
        plan = bisect_component(graph, 0, seed=0)

        assert {plan.part_a, plan.part_b} == {
            frozenset(range(5)), frozenset(range(5, 10))
        }
        assert plan.cut_edges == ((0, 5),)

    def test_two_nodes(self):
        graph = init_complete(2)
        plan = bisect_component(graph, 0, seed=0)
        assert {plan.part_a, plan.part_b} == {frozenset({0}), frozenset({1})}

    def test_path_of_three_falls_back(self):
        graph = UserGraph(3, [(0, 1), (1, 2)])
        plan = bisect_component(graph, 0, seed=0)
        assert plan.part_a == frozenset({0})
        assert plan.part_b == frozenset({1, 2})

    def test_path_of_four_cuts_one_edge(self):
        graph = UserGraph(4, [(0, 1), (1, 2), (2, 3)])
        plan = bisect_component(graph, 0, seed=0)
        assert {plan.part_a, plan.part_b} == {
            frozenset({0, 1}), frozenset({2, 3})
        }
        assert plan.cut_edges == ((1, 2),)

    @pytest.mark.parametrize("n", [60, 100, 200])
    @pytest.mark.parametrize("seed", range(4))
    def test_spectral_path_on_sparse_graphs(self, n, seed, caplog):
        """No BFS fallback and a balanced median cut."""
        graph = init_sparsified(n, seed=seed)
        with caplog.at_level(logging.WARNING):
            plan = bisect_component(graph, 0, seed=seed)
        assert "No Fiedler" not in caplog.text
        smaller = min(len(plan.part_a), len(plan.part_b))
        assert smaller >= n // 5

    @pytest.mark.parametrize("seed", range(5))
    def test_parts_are_connected_and_cover(self, seed):
        graph = init_sparsified(60, seed=seed)
        plan = bisect_component(graph, 0, seed=seed)

        assert plan.part_a and plan.part_b
        assert not plan.part_a & plan.part_b
        assert plan.members == frozenset(range(60))
        apply_split(graph, plan, trained_states(60))
        assert graph.m == 2
        assert {frozenset(c) for c in graph.clusters} == {
            plan.part_a, plan.part_b
        }

    def test_singleton_rejected(self):
        graph = UserGraph(2, [])
        with pytest.raises(SplitError, match="singleton"):
            bisect_component(graph, 0)

    def test_unknown_cluster_rejected(self):
        with pytest.raises(SplitError, match="Unknown cluster"):
            bisect_component(init_complete(3), 4)


class TestFiedlerVector:
    """Tests for the second Laplacian eigenvector."""

    @staticmethod
    def laplacian_of(graph, members):
        index = {node: pos for pos, node in enumerate(members)}
        lap = np.zeros((len(members), len(members)))
        for node in members:
            for neighbor in graph.adjacency[node]:
                if neighbor in index:
                    lap[index[node], index[neighbor]] -= 1.0
                    lap[index[node], index[node]] += 1.0
        return lap

    @pytest.mark.parametrize("n", [60, 100, 200])
    @pytest.mark.parametrize("seed", range(7))
    def test_matches_dense_eigensolver(self, n, seed):
        graph = init_sparsified(n, seed=seed)
        members = sorted(graph.clusters[0])
        vector = fiedler_vector(graph, members, seed=seed)
        assert vector is not None

        lap = self.laplacian_of(graph, members)
        lambda2 = np.linalg.eigvalsh(lap)[1]
        assert abs(np.linalg.norm(vector) - 1.0) < 1e-9
        assert abs(vector.sum()) < 1e-6
        assert abs(vector @ lap @ vector - lambda2) < 1e-3

    def test_stalled_iteration_solves_directly(self):
        graph = two_cliques()
        members = list(range(10))
        vector = fiedler_vector(graph, members, seed=0, max_iter=1)
        assert vector is not None
        # sides of the bridge get opposite signs
        assert len({np.sign(vector[i]) for i in range(5)}) == 1
        assert np.sign(vector[0]) != np.sign(vector[5])

    def test_edgeless_members(self):
        graph = UserGraph(4, [])
        assert fiedler_vector(graph, [0, 1, 2, 3], seed=0) is None


class TestMedianSplit:
    def test_strict_sides(self):
        part_a, part_b = median_split([0, 1, 2, 3], np.array([-2, -1, 1, 2]))
        assert part_a == {0, 1}
        assert part_b == {2, 3}

    def test_ties_balance_sides(self):
        part_a, part_b = median_split([0, 1, 2, 3], np.zeros(4))
        assert part_a == {0, 1}
        assert part_b == {2, 3}


class TestApplySplit:
    """Tests for executing a plan."""

    def test_aggregates_match_served_history(self):
        graph = two_cliques()
        states, history = trained_history(10)
        plan = bisect_component(graph, 0, seed=1)
        agg_a, agg_b = apply_split(graph, plan, states)

        for agg, part in ((agg_a, plan.part_a), (agg_b, plan.part_b)):
            corr, bias = replay_aggregate(history, part)
            inv = np.linalg.inv(corr)
            assert agg.members == set(part)
            assert np.abs(agg.agg_corr - corr).max() < 1e-9
            assert np.abs(agg.agg_bias - bias).max() < 1e-9
            assert np.abs(agg.agg_inv - inv).max() < 1e-9
            assert np.abs(agg.agg_weight - inv @ bias).max() < 1e-9

    def test_split_down_to_singletons(self):
        graph = init_complete(6)
        states, history = trained_history(6, seed=3)
        aggregates = {}
        while graph.m < 6:
            target = next(
                c for c in range(graph.m) if len(graph.clusters[c]) > 1
            )
            plan = bisect_component(graph, target, seed=0)
            for agg in apply_split(graph, plan, states):
                for user in agg.members:
                    aggregates[user] = agg

        assert graph.m == 6
        assert graph.edge_count == 0
        for user, state in enumerate(states):
            agg = aggregates[user]
            corr, bias = replay_aggregate(history, [user])
            assert agg.members == {user}
            assert np.abs(agg.agg_corr - state.corr).max() < 1e-9
            assert np.abs(agg.agg_inv - state.inv_corr).max() < 1e-9
            assert np.abs(agg.agg_bias - state.bias).max() < 1e-9
            assert np.abs(agg.agg_corr - corr).max() < 1e-9

    def test_fresh_pair_splits_to_fresh_singletons(self):
        graph = init_complete(2)
        states = [BanditState.fresh(3), BanditState.fresh(3)]
        agg_a, agg_b = apply_split(
            graph, bisect_component(graph, 0, seed=0), states
        )
        assert {frozenset(agg_a.members), frozenset(agg_b.members)} == {
            frozenset({0}), frozenset({1})
        }
        for agg in (agg_a, agg_b):
            assert np.array_equal(agg.agg_corr, np.eye(3))
            assert np.array_equal(agg.agg_inv, np.eye(3))
            assert np.array_equal(agg.agg_bias, np.zeros(3))
            assert np.array_equal(agg.agg_weight, np.zeros(3))

    def test_stale_plan_rejected(self):
        graph = two_cliques()
        plan = bisect_component(graph, 0, seed=0)
        graph.delete_edge(1, 2)
        with pytest.raises(SplitError, match="Stale"):
            apply_split(graph, plan, trained_states(10))

    def test_cluster_count_grows_by_one(self):
        graph = init_sparsified(40, seed=2)
        states = trained_states(40)
        for expected in range(2, 6):
            target = max(range(graph.m), key=lambda c: len(graph.clusters[c]))
            apply_split(graph, bisect_component(graph, target, seed=0), states)
            assert graph.m == expected


@pytest.mark.parametrize("trial", range(100))
def test_split_conserves_pooled_statistics(trial):
    """Both halves together hold exactly what the cluster held."""
    rng = np.random.default_rng(trial)
    n = int(rng.integers(2, 40))
    graph = init_sparsified(n, seed=rng)
    states = trained_states(n, d=4, seed=trial)
    before = build_aggregate(states, graph.clusters[0])

    plan = bisect_component(graph, 0, seed=rng)
    agg_a, agg_b = apply_split(graph, plan, states)

    eye = np.eye(4)
    pooled = (agg_a.agg_corr - eye) + (agg_b.agg_corr - eye)
    assert np.abs(pooled - (before.agg_corr - eye)).max() < 1e-9
    assert np.abs(agg_a.agg_bias + agg_b.agg_bias - before.agg_bias).max() < 1e-9
    assert graph.m == 2
