"""
Exploratory bisection of a user cluster.

A cluster is cut in two by spectral bisection of its graph Laplacian,
both halves are made connected, and the crossing edges are deleted.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import laplacian
from scipy.sparse.linalg import ArpackError, eigsh

from ..bandit.core import StateLookup, build_aggregate
from ..bandit.models import ClusterAggregate
from ..errors import SplitError
from ..utils.helpers import SeedLike, as_generator
from .user_graph import UserGraph

logger = logging.getLogger(__name__)

POWER_TOLERANCE = 1e-6
POWER_MAX_ITER = 500
MIN_SPECTRAL_SIZE = 4
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class SplitPlan:
    """Two-way partition of one cluster and the edges crossing it."""

    target_cluster: int
    part_a: FrozenSet[int]
    part_b: FrozenSet[int]
    cut_edges: Tuple[Tuple[int, int], ...]
    graph_version: int

    @property
    def members(self) -> FrozenSet[int]:
        return self.part_a | self.part_b


def bisect_component(
    graph: UserGraph,
    cluster_id: int,
    seed: SeedLike = None,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITER,
) -> SplitPlan:
    """
    Plan a two-way split of a cluster with a small edge cut.

    Args:
        graph: The user graph
        cluster_id: Cluster to bisect
        seed: Seed or Generator for the power-iteration start vector
        tol: Convergence tolerance of power iteration
        max_iter: Iteration cap of power iteration

    Returns:
        SplitPlan whose parts are both nonempty and connected

    Raises:
        SplitError: if the cluster has fewer than two members
    """
    if not 0 <= cluster_id < graph.m:
        raise SplitError(f"Unknown cluster id {cluster_id}")
    members = sorted(graph.clusters[cluster_id])
    if len(members) < 2:
        raise SplitError(f"Cluster {cluster_id} is a singleton")

    parts: Optional[Tuple[Set[int], Set[int]]] = None
    if len(members) >= MIN_SPECTRAL_SIZE:
        fiedler = fiedler_vector(graph, members, seed, tol, max_iter)
        if fiedler is None:
            logger.warning(
                f"No Fiedler vector for cluster {cluster_id} "
                f"({len(members)} members); using BFS bisection"
            )
        else:
            parts = median_split(members, fiedler)
    if parts is None or not parts[0] or not parts[1]:
        parts = _bfs_bisection(graph, members)

    part_a, part_b = _make_connected(graph, members, *parts)
    cut = sorted(
        (min(u, v), max(u, v))
        for u in part_a
        for v in graph.adjacency[u]
        if v in part_b
    )
    return SplitPlan(
        target_cluster=cluster_id,
        part_a=frozenset(part_a),
        part_b=frozenset(part_b),
        cut_edges=tuple(cut),
        graph_version=graph.version,
    )


def fiedler_vector(
    graph: UserGraph,
    members: Sequence[int],
    seed: SeedLike = None,
    tol: float = POWER_TOLERANCE,
    max_iter: int = POWER_MAX_ITER,
) -> Optional[np.ndarray]:
    """
    Second Laplacian eigenvector of the induced subgraph.

    Power iteration on (c I - L) with the constant vector projected out,
    where c = 2 * max degree bounds the Laplacian spectrum. Iteration
    stops once the eigen-residual ||L v - (v^T L v) v|| drops below
    ``tol * c``. If it does not, the pair is solved directly with scipy.

    Returns:
        Unit vector aligned with ``members``, or None if no solver
        produced one
    """
    index = {node: pos for pos, node in enumerate(members)}
    rows, cols = [], []
    for node in members:
        for neighbor in graph.adjacency[node]:
            if neighbor in index:
                rows.append(index[node])
                cols.append(index[neighbor])
    size = len(members)
    adjacency = coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(size, size)
    ).tocsr()
    lap = laplacian(adjacency)
    shift = 2.0 * float(np.max(np.asarray(adjacency.sum(axis=1))))
    if shift == 0.0:
        return None

    rng = as_generator(seed)
    start = rng.standard_normal(size)
    vector = start - start.mean()
    vector /= np.linalg.norm(vector)
    for _ in range(max_iter):
        lv = lap @ vector
        residual = np.linalg.norm(lv - float(vector @ lv) * vector)
        if residual <= tol * shift:
            return vector
        nxt = shift * vector - lv
        nxt -= nxt.mean()
        norm = np.linalg.norm(nxt)
        if norm == 0.0:
            break
        vector = nxt / norm

    logger.debug(
        f"Power iteration stalled on {size} members; solving directly"
    )
    return _direct_fiedler(lap, start)


def _direct_fiedler(lap, start: np.ndarray) -> Optional[np.ndarray]:
    size = lap.shape[0]
    try:
        if size <= DENSE_LIMIT:
            _, vectors = eigh(lap.toarray(), subset_by_index=[1, 1])
            vector = vectors[:, 0]
        else:
            # shift-invert just below 0 keeps (L - sigma I) nonsingular
            _, vectors = eigsh(
                lap.tocsc(), k=2, sigma=-1e-3, which="LM", v0=start
            )
            vector = vectors[:, 1]
    except (LinAlgError, ArpackError, ValueError) as e:
        logger.debug(f"Direct eigensolver failed: {e}")
        return None
    vector = vector - vector.mean()
    norm = np.linalg.norm(vector)
    return None if norm == 0.0 else vector / norm


def median_split(
    members: Sequence[int], values: np.ndarray
) -> Tuple[Set[int], Set[int]]:
    """
    Threshold at the median; nodes exactly at the median are handed to
    part_a in id order while it stays no larger than part_b plus the
    ties still to place.
    """
    median = float(np.median(values))
    part_a: Set[int] = set()
    part_b: Set[int] = set()
    ties: List[int] = []
    for node, value in zip(members, values):
        if value < median:
            part_a.add(node)
        elif value > median:
            part_b.add(node)
        else:
            ties.append(node)
    ties.sort()
    for pos, node in enumerate(ties):
        pending = len(ties) - pos - 1
        if len(part_a) < len(part_b) + pending:
            part_a.add(node)
        else:
            part_b.add(node)
    return part_a, part_b


def _bfs_bisection(
    graph: UserGraph, members: Sequence[int]
) -> Tuple[Set[int], Set[int]]:
    """First half of a BFS order from the lowest id versus the rest."""
    member_set = set(members)
    root = members[0]
    order = [root]
    seen = {root}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for neighbor in sorted(graph.adjacency[node]):
            if neighbor in member_set and neighbor not in seen:
                seen.add(neighbor)
                order.append(neighbor)
                queue.append(neighbor)
    half = max(1, len(order) // 2)
    return set(order[:half]), member_set - set(order[:half])


def _components(graph: UserGraph, nodes: Set[int]) -> List[Set[int]]:
    remaining = set(nodes)
    components = []
    for root in sorted(nodes):
        if root not in remaining:
            continue
        remaining.discard(root)
        component = {root}
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for neighbor in graph.adjacency[node]:
                if neighbor in remaining:
                    remaining.discard(neighbor)
                    component.add(neighbor)
                    queue.append(neighbor)
        components.append(component)
    return components


def _largest(components: List[Set[int]]) -> Set[int]:
    # ties resolved toward the component holding the smallest id
    return max(components, key=lambda c: (len(c), -min(c)))


def _make_connected(
    graph: UserGraph,
    members: Sequence[int],
    part_a: Set[int],
    part_b: Set[int],
) -> Tuple[Set[int], Set[int]]:
    """
    Turn any bisection of a connected cluster into one with two
    connected sides.

    The largest piece of part_a is kept; the complement's largest piece
    becomes part_b and every other piece joins part_a, which stays
    connected because each such piece borders part_a.
    """
    member_set = set(members)
    core_a = _largest(_components(graph, part_a))
    core_b = _largest(_components(graph, member_set - core_a))
    return member_set - core_b, core_b


def apply_split(
    graph: UserGraph, plan: SplitPlan, member_states: StateLookup
) -> Tuple[ClusterAggregate, ClusterAggregate]:
    """
    Delete the plan's cut edges and rebuild both aggregates.

    Args:
        graph: The user graph the plan was made on
        plan: Output of bisect_component
        member_states: User id -> BanditState lookup

    Returns:
        Aggregates over part_a and part_b

    Raises:
        SplitError: if the graph changed since the plan was made
    """
    if plan.graph_version != graph.version:
        raise SplitError(
            f"Stale split plan for cluster {plan.target_cluster}: graph "
            f"version {graph.version}, plan version {plan.graph_version}"
        )
    if graph.clusters[plan.target_cluster] != set(plan.members):
        raise SplitError(
            f"Split plan does not cover cluster {plan.target_cluster}"
        )

    clusters_before = graph.m
    for u, v in plan.cut_edges:
        graph.delete_edge(u, v)
    if graph.m != clusters_before + 1:
        raise SplitError(
            f"Split of cluster {plan.target_cluster} produced "
            f"{graph.m - clusters_before} new clusters"
        )

    logger.debug(
        f"Split cluster {plan.target_cluster} into {len(plan.part_a)} + "
        f"{len(plan.part_b)} members, {len(plan.cut_edges)} edges cut"
    )
    return (
        build_aggregate(member_states, plan.part_a),
        build_aggregate(member_states, plan.part_b),
    )
