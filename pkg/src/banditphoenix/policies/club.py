"""
CLUB and GCLUB: linear bandits over the connected components of an
evolving user graph.
"""

import logging
from typing import Dict, List

import numpy as np

from ..bandit.core import (
    absorb_update,
    build_aggregate,
    deletion_threshold,
    rank_one_update,
    select_item,
)
from ..bandit.models import BanditState, ClusterAggregate, ContextSet
from ..graph.split import apply_split, bisect_component
from ..graph.user_graph import (
    SplitEvent,
    UserGraph,
    init_complete,
    init_sparsified,
)
from ..utils.helpers import spawn_generators
from .base import Policy
from .models import ClusterChange, PolicyConfig

logger = logging.getLogger(__name__)


class ClubPolicy(Policy):
    """
    Cluster of bandits.

    Every user keeps its own least-squares state; items are chosen with
    the pooled estimator of the user's cluster. After each payoff the
    served user's edges to neighbors whose estimates differ by more than
    the sum of their deletion radii are removed.
    """

    name = "club"

    def __init__(self, n_users: int, config: PolicyConfig):
        super().__init__(n_users, config)
        graph_rng, self._coin_rng, self._split_rng = spawn_generators(
            config.seed, 3
        )
        dimension = config.dimension
        self.states: List[BanditState] = [
            BanditState.fresh(dimension) for _ in range(n_users)
        ]
        self.weights = np.zeros((n_users, dimension))
        self.serve_counts = np.zeros(n_users, dtype=np.int64)

        if config.graph == "complete":
            self.graph: UserGraph = init_complete(n_users)
        else:
            self.graph = init_sparsified(
                n_users, graph_rng, density=config.graph_density
            )
        self.aggregates: Dict[int, ClusterAggregate] = {}
        self.rebuild_aggregates()
        self.changes: List[ClusterChange] = []

        logger.info(
            f"{self.name} policy initialized: {n_users} users, "
            f"d={dimension}, {self.graph.edge_count} edges, "
            f"alpha={config.alpha}, alpha2={config.alpha2}"
        )

    def rebuild_aggregates(self) -> None:
        """Recompute every cluster estimator from member states."""
        self.aggregates = {
            cluster_id: build_aggregate(self.states, members)
            for cluster_id, members in enumerate(self.graph.clusters)
        }

    @property
    def cluster_count(self) -> int:
        return self.graph.m

    def select(self, user: int, ctx: ContextSet) -> int:
        self._check_user(user)
        cluster_id = self.graph.cluster_index[user]
        return select_item(
            self.aggregates[cluster_id], ctx, self.config.alpha
        )

    def observe(
        self, user: int, ctx: ContextSet, chosen: int, payoff: float
    ) -> None:
        self._check_user(user)
        x = ctx.vectors[chosen]
        state = rank_one_update(self.states[user], x, payoff)
        self.weights[user] = state.weight
        self.serve_counts[user] = state.serve_count
        absorb_update(
            self.aggregates[self.graph.cluster_index[user]], x, payoff
        )
        self._update_clusters(user, ctx.round)

    def _update_clusters(self, user: int, t: int) -> None:
        self._delete_edges(user, t)

    def _delete_edges(self, user: int, t: int) -> None:
        neighbors = sorted(self.graph.adjacency[user])
        if not neighbors:
            return
        alpha2 = self.config.alpha2
        index = np.asarray(neighbors)
        gaps = np.linalg.norm(
            self.weights[index] - self.weights[user], axis=1
        )
        radius = deletion_threshold(
            self.serve_counts[index], alpha2
        ) + deletion_threshold(int(self.serve_counts[user]), alpha2)
        doomed = {neighbors[k] for k in np.flatnonzero(gaps > radius)}
        if not doomed:
            return

        events = self.graph.delete_edges_for_user(user, doomed.__contains__)
        for event in events:
            self._record(event, t, "deletion")

    def _record(self, event: SplitEvent, t: int, cause: str) -> None:
        self.aggregates[event.old_cluster] = build_aggregate(
            self.states, event.kept
        )
        self.aggregates[event.new_cluster] = build_aggregate(
            self.states, event.moved
        )
        self.changes.append(ClusterChange(round=t, cause=cause, event=event))
        logger.debug(
            f"Round {t}: {cause} split, now {self.graph.m} clusters"
        )


class GClubPolicy(ClubPolicy):
    """
    CLUB with randomized cluster exploration during cold start.

    With probability ``split_prob`` a round skips edge deletion and, while
    t + 1 <= cold_start_fraction * horizon, bisects a random cluster other
    than the served user's.
    """

    name = "gclub"

    def _update_clusters(self, user: int, t: int) -> None:
        explore = self._coin_rng.random() < self.config.split_prob
        if not explore:
            self._delete_edges(user, t)
            return
        if t + 1 > self.config.cold_start_fraction * self.config.horizon:
            return

        home = self.graph.cluster_index[user]
        candidates = [
            cluster_id
            for cluster_id, members in enumerate(self.graph.clusters)
            if cluster_id != home and len(members) >= 2
        ]
        if not candidates:
            return
        target = candidates[int(self._coin_rng.integers(len(candidates)))]
        plan = bisect_component(self.graph, target, self._split_rng)
        for agg in apply_split(self.graph, plan, self.states):
            self.aggregates[self.graph.cluster_index[min(agg.members)]] = agg

        new_cluster = self.graph.m - 1
        event = SplitEvent(
            old_cluster=target,
            new_cluster=new_cluster,
            kept=frozenset(self.graph.clusters[target]),
            moved=frozenset(self.graph.clusters[new_cluster]),
        )
        self.changes.append(
            ClusterChange(round=t, cause="exploration", event=event)
        )
        logger.debug(
            f"Round {t}: exploration split of cluster {target}, "
            f"now {self.graph.m} clusters"
        )
