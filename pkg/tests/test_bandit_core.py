import math

import numpy as np
import pytest

from src.banditphoenix.bandit.core import (
    REFRESH_INTERVAL,
    absorb_update,
    build_aggregate,
    confidence_width,
    deletion_threshold,
    rank_one_update,
    select_item,
    spd_inverse,
)
from src.banditphoenix.bandit.models import (
    BanditState,
    ClusterAggregate,
    ContextSet,
)
from src.banditphoenix.errors import BanditError


def unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def trained_state(rng, d, rounds):
    """State after random updates plus the raw history."""
    state = BanditState.fresh(d)
    history = []
    for _ in range(rounds):
        x = unit(rng, d)
        a = float(rng.uniform(-1, 1))
        rank_one_update(state, x, a)
        history.append((x, a))
    return state, history


class TestRankOneUpdate:
    """Tests for per-user least-squares updates."""

    def test_single_axis_update(self):
        """An update along e1 halves the first diagonal entry."""
        state = BanditState.fresh(4)
        x = np.eye(4)[0]

        rank_one_update(state, x, 1.0)

        expected_inv = np.diag([0.5, 1.0, 1.0, 1.0])
        assert np.allclose(state.inv_corr, expected_inv, atol=1e-15)
        assert np.array_equal(state.bias, x)
        assert np.allclose(state.weight, [0.5, 0, 0, 0])
        assert state.serve_count == 1

    def test_zero_vector_only_counts(self):
        """A zero context leaves everything but the count unchanged."""
        state = BanditState.fresh(3)
        rank_one_update(state, np.zeros(3), 0.0)

        assert np.array_equal(state.inv_corr, np.eye(3))
        assert np.array_equal(state.bias, np.zeros(3))
        assert state.serve_count == 1

    @pytest.mark.parametrize("d", [2, 10, 25])
    def test_inverse_matches_direct_inversion(self, d):
        """1000 rank-one steps stay within 1e-9 of a direct inverse."""
        rng = np.random.default_rng(d)
        state, history = trained_state(rng, d, 1000)

        forward = np.eye(d) + sum(np.outer(x, x) for x, _ in history)
        assert np.abs(state.inv_corr - np.linalg.inv(forward)).max() < 1e-9
        assert np.abs(state.inv_corr @ forward - np.eye(d)).max() < 1e-8
        assert np.allclose(state.corr, forward, atol=1e-12)
        assert np.array_equal(state.weight, state.inv_corr @ state.bias)

    def test_periodic_reinversion(self):
        """Every REFRESH_INTERVAL updates the inverse is recomputed."""
        rng = np.random.default_rng(0)
        state, _ = trained_state(rng, 5, 10)
        state.serve_count = REFRESH_INTERVAL - 1

        rank_one_update(state, unit(rng, 5), 0.3)

        assert state.serve_count == REFRESH_INTERVAL
        assert np.allclose(
            state.inv_corr, np.linalg.inv(state.corr), atol=1e-12
        )
        assert np.allclose(state.inv_corr, state.inv_corr.T)

    def test_non_finite_context_rejected(self):
        """NaN entries raise BanditError and leave the state intact."""
        state = BanditState.fresh(3)
        with pytest.raises(BanditError, match="non-finite"):
            rank_one_update(state, np.array([1.0, np.nan, 0.0]), 1.0)
        assert state.serve_count == 0

    def test_wrong_dimension_rejected(self):
        """Context length must equal the state dimension."""
        with pytest.raises(BanditError, match="Expected a 3-vector"):
            rank_one_update(BanditState.fresh(3), np.ones(4), 1.0)

    def test_non_finite_payoff_rejected(self):
        """Payoffs must be finite."""
        with pytest.raises(BanditError, match="Payoff"):
            rank_one_update(BanditState.fresh(2), np.ones(2), math.inf)


class TestBuildAggregate:
    """Tests for pooling member states into a cluster estimator."""

    def test_singleton_equals_member_state(self):
        """A one-member aggregate is an exact, independent copy."""
        state, _ = trained_state(np.random.default_rng(1), 4, 20)
        agg = build_aggregate([state], {0})

        assert np.array_equal(agg.agg_inv, state.inv_corr)
        assert np.array_equal(agg.agg_weight, state.weight)
        assert agg.update_count == state.serve_count
        assert agg.agg_inv is not state.inv_corr

    def test_fresh_members_sum_to_identity(self):
        """Two fresh members pool to the identity prior."""
        states = [BanditState.fresh(3), BanditState.fresh(3)]
        agg = build_aggregate(states, {0, 1})

        assert np.allclose(agg.agg_corr, np.eye(3))
        assert np.allclose(agg.agg_inv, np.eye(3))
        assert np.array_equal(agg.agg_bias, np.zeros(3))
        assert np.array_equal(agg.agg_weight, np.zeros(3))

    def test_matches_brute_force_over_histories(self):
        """Five trained members equal one user holding all rounds."""
        rng = np.random.default_rng(2)
        d = 8
        states, rounds = [], []
        for _ in range(5):
            state, history = trained_state(rng, d, 30)
            states.append(state)
            rounds.extend(history)
        agg = build_aggregate(states, range(5))

        forward = np.eye(d) + sum(np.outer(x, x) for x, _ in rounds)
        bias = sum(a * x for x, a in rounds)
        assert np.abs(agg.agg_inv - np.linalg.inv(forward)).max() < 1e-9
        assert np.allclose(agg.agg_bias, bias, atol=1e-12)
        assert np.allclose(agg.agg_weight, agg.agg_inv @ agg.agg_bias)

    def test_mapping_lookup(self):
        """Member states can come from a dict keyed by user id."""
        states = {7: BanditState.fresh(2), 9: BanditState.fresh(2)}
        agg = build_aggregate(states, [9, 7])
        assert agg.members == {7, 9}

    def test_empty_members_rejected(self):
        """An aggregate needs at least one member."""
        with pytest.raises(BanditError, match="empty"):
            build_aggregate([BanditState.fresh(2)], set())

    def test_incremental_matches_rebuild(self):
        """absorb_update keeps the aggregate equal to a rebuild."""
        rng = np.random.default_rng(3)
        states = [trained_state(rng, 5, 10)[0] for _ in range(3)]
        agg = build_aggregate(states, {0, 1, 2})

        for step in range(50):
            user = step % 3
            x = unit(rng, 5)
            rank_one_update(states[user], x, 0.5)
            absorb_update(agg, x, 0.5)

        rebuilt = build_aggregate(states, {0, 1, 2})
        assert np.abs(agg.agg_inv - rebuilt.agg_inv).max() < 1e-9
        assert np.allclose(agg.agg_bias, rebuilt.agg_bias)
        assert np.allclose(agg.agg_weight, rebuilt.agg_weight, atol=1e-9)


class TestConfidenceAndSelection:
    """Tests for the exploration bonus and item choice."""

    def test_width_zero_at_round_zero(self):
        """log(0 + 1) = 0 removes the bonus."""
        agg = ClusterAggregate.of_state(0, BanditState.fresh(3))
        assert confidence_width(np.eye(3)[1], agg, 0, 2.0) == 0.0

    def test_width_equals_alpha_at_e_minus_one(self):
        """Fresh estimator, unit x, log(e) = 1."""
        agg = ClusterAggregate.of_state(0, BanditState.fresh(3))
        width = confidence_width(np.eye(3)[0], agg, math.e - 1, 0.7)
        assert width == pytest.approx(0.7)

    def test_width_shrinks_with_updates(self):
        """Repeated updates along e1 follow alpha*sqrt(log(t+1)/(1+k))."""
        state = BanditState.fresh(2)
        x = np.array([1.0, 0.0])
        t = 50
        widths = []
        for k in range(1, 6):
            rank_one_update(state, x, 0.0)
            agg = ClusterAggregate.of_state(0, state)
            widths.append(confidence_width(x, agg, t, 1.0))
            assert widths[-1] == pytest.approx(
                math.sqrt(math.log(t + 1) / (1 + k))
            )
        assert widths == sorted(widths, reverse=True)

    def test_width_linear_in_alpha(self):
        agg = ClusterAggregate.of_state(0, BanditState.fresh(2))
        x = np.array([0.6, 0.8])
        assert confidence_width(x, agg, 10, 3.0) == pytest.approx(
            3.0 * confidence_width(x, agg, 10, 1.0)
        )

    def test_fresh_estimator_picks_first(self):
        """All scores tie at round 0, lowest index wins."""
        agg = ClusterAggregate.of_state(0, BanditState.fresh(3))
        ctx = ContextSet(vectors=np.eye(3), round=0)
        assert select_item(agg, ctx, 1.0) == 0

    def test_single_item(self):
        agg = ClusterAggregate.of_state(0, BanditState.fresh(2))
        ctx = ContextSet(vectors=np.array([[0.0, 1.0]]), round=9)
        assert select_item(agg, ctx, 1.0) == 0

    def test_trained_estimator_picks_aligned_item(self):
        """After 1000 noiseless rounds the u-aligned item wins."""
        rng = np.random.default_rng(4)
        u = unit(rng, 4)
        state = BanditState.fresh(4)
        for _ in range(1000):
            x = unit(rng, 4)
            rank_one_update(state, x, float(u @ x))
        agg = ClusterAggregate.of_state(0, state)

        perp = unit(rng, 4)
        perp -= (perp @ u) * u
        perp /= np.linalg.norm(perp)
        ctx = ContextSet(vectors=np.stack([-u, perp, u]), round=1000)
        assert select_item(agg, ctx, 0.01) == 2

    def test_permutation_invariance(self):
        """Permuting the set permutes the chosen index."""
        rng = np.random.default_rng(5)
        state, _ = trained_state(rng, 3, 40)
        agg = ClusterAggregate.of_state(0, state)
        vectors = np.stack([unit(rng, 3) for _ in range(6)])
        chosen = select_item(agg, ContextSet(vectors, round=40), 0.5)

        for _ in range(5):
            perm = rng.permutation(6)
            ctx = ContextSet(vectors[perm], round=40)
            assert perm[select_item(agg, ctx, 0.5)] == chosen

    def test_empty_set_rejected(self):
        agg = ClusterAggregate.of_state(0, BanditState.fresh(3))
        with pytest.raises(BanditError, match="empty"):
            select_item(agg, ContextSet(np.zeros((0, 3)), round=0), 1.0)

    def test_dimension_mismatch_rejected(self):
        agg = ClusterAggregate.of_state(0, BanditState.fresh(3))
        with pytest.raises(BanditError, match="dimension"):
            select_item(agg, ContextSet(np.ones((2, 4)), round=0), 1.0)

    def test_non_positive_alpha_rejected(self):
        agg = ClusterAggregate.of_state(0, BanditState.fresh(3))
        with pytest.raises(BanditError, match="alpha"):
            select_item(agg, ContextSet(np.eye(3), round=0), 0.0)


class TestDeletionThreshold:
    """Tests for the edge-deletion radius."""

    def test_fresh_user(self):
        assert deletion_threshold(0, 0.4) == pytest.approx(0.4)

    def test_closed_form_point(self):
        value = deletion_threshold(math.e - 1, 1.0)
        assert value == pytest.approx(math.sqrt(2 / math.e))

    def test_non_increasing_from_two(self):
        counts = np.unique(np.geomspace(2, 1e6, 2000).astype(np.int64))
        radii = deletion_threshold(counts, 1.0)
        assert np.all(np.diff(radii) <= 0)

    def test_vanishes_for_large_counts(self):
        assert deletion_threshold(10**8, 2.0) < 1e-3 * 2.0

    def test_array_input(self):
        radii = deletion_threshold(np.array([0, 0]), 1.5)
        assert isinstance(radii, np.ndarray)
        assert np.allclose(radii, [1.5, 1.5])

    def test_invalid_arguments(self):
        with pytest.raises(BanditError):
            deletion_threshold(3, 0.0)
        with pytest.raises(BanditError):
            deletion_threshold(-1, 1.0)


class TestSpdInverse:
    def test_rejects_indefinite_matrix(self):
        with pytest.raises(BanditError, match="positive definite"):
            spd_inverse(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_inverse_is_symmetric(self):
        matrix = np.array([[4.0, 1.0], [1.0, 3.0]])
        inverse = spd_inverse(matrix)
        assert np.array_equal(inverse, inverse.T)
        assert np.allclose(inverse @ matrix, np.eye(2))
