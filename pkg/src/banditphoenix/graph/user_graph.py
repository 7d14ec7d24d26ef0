"""
User graph for online clustering of bandits.
Decremental connectivity over a spanning forest, with cluster bookkeeping.
"""

import logging
import math
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import (
    Callable,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Set,
    Tuple,
    Union,
)

import numpy as np

from ..errors import GraphError
from ..utils.helpers import SeedLike, as_generator

logger = logging.getLogger(__name__)

# Below this size the sparsified initializer returns the complete graph
DENSE_THRESHOLD = 32


@dataclass(frozen=True)
class SplitEvent:
    """A cluster broke into two components.

    ``kept`` retains ``old_cluster`` as its id, ``moved`` gets
    ``new_cluster``.
    """

    old_cluster: int
    new_cluster: int
    kept: FrozenSet[int]
    moved: FrozenSet[int]

    @property
    def members(self) -> FrozenSet[int]:
        return self.kept | self.moved


class UserGraph:
    """
    Undirected user graph supporting edge deletions and connectivity
    queries.

    A spanning forest is kept alongside the edge set. Deleting a
    non-forest edge never disconnects anything. Deleting a forest edge
    explores both halves of the broken tree in lockstep until the smaller
    half is exhausted, then looks for a remaining edge leaving it; if
    none exists the cluster splits.
    """

    def __init__(self, n: int, edges: Iterable[Tuple[int, int]] = ()):
        if n < 1:
            raise GraphError(f"Graph needs at least one node, got n={n}")
        self.n = n
        self.adjacency: List[Set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            self._check_node(u)
            self._check_node(v)
            if u == v:
                raise GraphError(f"Self loop on node {u}")
            self.adjacency[u].add(v)
            self.adjacency[v].add(u)

        self._forest: List[Set[int]] = [set() for _ in range(n)]
        self.cluster_index: List[int] = [0] * n
        self.clusters: List[Set[int]] = []
        self.version = 0
        self._build_forest()

        logger.info(
            f"UserGraph initialized: {n} nodes, {self.edge_count} edges, "
            f"{self.m} clusters"
        )

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.n:
            raise GraphError(f"Node id {node} out of range [0, {self.n})")

    def _build_forest(self) -> None:
        """BFS forest from every unvisited node in id order."""
        visited = [False] * self.n
        for root in range(self.n):
            if visited[root]:
                continue
            cluster_id = len(self.clusters)
            members = {root}
            visited[root] = True
            self.cluster_index[root] = cluster_id
            queue = deque([root])
            while queue:
                node = queue.popleft()
                for neighbor in sorted(self.adjacency[node]):
                    if not visited[neighbor]:
                        visited[neighbor] = True
                        members.add(neighbor)
                        self.cluster_index[neighbor] = cluster_id
                        self._forest[node].add(neighbor)
                        self._forest[neighbor].add(node)
                        queue.append(neighbor)
            self.clusters.append(members)

    @property
    def m(self) -> int:
        """Current number of clusters."""
        return len(self.clusters)

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def edges(self) -> Iterator[Tuple[int, int]]:
        """Edges as (i, j) pairs with i < j, in sorted order."""
        for u in range(self.n):
            for v in sorted(self.adjacency[u]):
                if u < v:
                    yield u, v

    def has_edge(self, u: int, v: int) -> bool:
        self._check_node(u)
        self._check_node(v)
        return v in self.adjacency[u]

    def is_connected(self, i: int, l: int) -> bool:
        """True iff users i and l are in the same component."""
        self._check_node(i)
        self._check_node(l)
        return self.cluster_index[i] == self.cluster_index[l]

    def components_of(self) -> List[Set[int]]:
        """Copies of the current clusters, indexed by cluster id."""
        return [set(members) for members in self.clusters]

    def delete_edge(self, u: int, v: int) -> Optional[SplitEvent]:
        """
        Remove edge (u, v) if present.

        Returns:
            The split event if the deletion disconnected a cluster
        """
        self._check_node(u)
        self._check_node(v)
        if v not in self.adjacency[u]:
            return None

        self.adjacency[u].discard(v)
        self.adjacency[v].discard(u)
        self.version += 1
        if v not in self._forest[u]:
            return None

        self._forest[u].discard(v)
        self._forest[v].discard(u)
        side = self._smaller_tree_side(u, v)
        replacement = self._find_replacement(side)
        if replacement is not None:
            a, b = replacement
            self._forest[a].add(b)
            self._forest[b].add(a)
            return None

        old_cluster = self.cluster_index[u]
        new_cluster = len(self.clusters)
        self.clusters[old_cluster] -= side
        self.clusters.append(set(side))
        for node in side:
            self.cluster_index[node] = new_cluster

        event = SplitEvent(
            old_cluster=old_cluster,
            new_cluster=new_cluster,
            kept=frozenset(self.clusters[old_cluster]),
            moved=frozenset(side),
        )
        logger.debug(
            f"Edge ({u}, {v}) split cluster {old_cluster}: "
            f"{len(event.kept)} + {len(event.moved)} members"
        )
        return event

    def _smaller_tree_side(self, u: int, v: int) -> Set[int]:
        seen_u, seen_v = {u}, {v}
        queue_u, queue_v = deque([u]), deque([v])
        while True:
            if not queue_u:
                return seen_u
            if not queue_v:
                return seen_v
            self._expand(queue_u, seen_u)
            self._expand(queue_v, seen_v)

    def _expand(self, queue: deque, seen: Set[int]) -> None:
        node = queue.popleft()
        for neighbor in self._forest[node]:
            if neighbor not in seen:
                seen.add(neighbor)
                queue.append(neighbor)

    def _find_replacement(self, side: Set[int]) -> Optional[Tuple[int, int]]:
        for node in side:
            for neighbor in self.adjacency[node]:
                if neighbor not in side:
                    return node, neighbor
        return None

    def delete_edges_for_user(
        self, user: int, neighbor_test: Callable[[int], bool]
    ) -> List[SplitEvent]:
        """
        Delete every edge (user, l) for which neighbor_test(l) holds.

        Args:
            user: The served user
            neighbor_test: Predicate over neighbor ids

        Returns:
            Split events in the order they happened
        """
        self._check_node(user)
        events = []
        for neighbor in sorted(self.adjacency[user]):
            if neighbor_test(neighbor):
                event = self.delete_edge(user, neighbor)
                if event is not None:
                    events.append(event)
        return events

    def dump_edges(self, path: Union[str, Path]) -> Path:
        """Write the edge list, one "i j" pair per line."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8") as fh:
            for u, v in self.edges():
                fh.write(f"{u} {v}\n")
        logger.info(f"Dumped {self.edge_count} edges to {target}")
        return target


def init_complete(n: int) -> UserGraph:
    """Complete graph on n users."""
    if n < 1:
        raise GraphError(f"Graph needs at least one node, got n={n}")
    return UserGraph(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def init_sparsified(
    n: int,
    seed: SeedLike = None,
    density: float = 3.0,
    dense_threshold: int = DENSE_THRESHOLD,
) -> UserGraph:
    """
    Connected random graph with O(n log n) edges.

    Erdos-Renyi with p = min(1, density * ln n / n) plus a random
    Hamiltonian path. Small graphs (n <= dense_threshold) are complete.

    Args:
        n: Number of users
        seed: Seed or Generator
        density: Multiplier of ln n / n
        dense_threshold: Largest n that gets the complete graph

    Returns:
        Connected UserGraph with a single cluster
    """
    if n < 1:
        raise GraphError(f"Graph needs at least one node, got n={n}")
    if density <= 0:
        raise GraphError(f"density must be positive, got {density}")
    if n <= dense_threshold:
        return init_complete(n)

    rng = as_generator(seed)
    p = min(1.0, density * math.log(n) / n)
    edges: Set[Tuple[int, int]] = set()
    for i in range(n - 1):
        candidates = n - 1 - i
        count = int(rng.binomial(candidates, p))
        if count:
            picks = rng.choice(candidates, size=count, replace=False)
            edges.update((i, i + 1 + int(j)) for j in picks)

    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        a, b = int(a), int(b)
        edges.add((min(a, b), max(a, b)))
    return UserGraph(n, sorted(edges))


def bfs_components(n: int, adjacency: List[Set[int]]) -> List[Set[int]]:
    """Connected components by plain BFS, used as a reference oracle."""
    seen = [False] * n
    components = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        component = {root}
        queue = deque([root])
        while queue:
            node = queue.popleft()
            for neighbor in adjacency[node]:
                if not seen[neighbor]:
                    seen[neighbor] = True
                    component.add(neighbor)
                    queue.append(neighbor)
        components.append(component)
    return components


@dataclass
class FuzzReport:
    """Outcome of a randomized comparison against the BFS oracle."""

    n: int
    initial_edges: int
    deletions: int
    queries: int
    mismatches: int
    final_clusters: int
    seconds: float

    @property
    def ok(self) -> bool:
        return self.mismatches == 0


def fuzz_against_oracle(
    n: int,
    operations: int,
    seed: SeedLike = None,
    delete_fraction: float = 0.5,
    density: float = 3.0,
) -> FuzzReport:
    """
    Interleave random deletions and connectivity queries, checking every
    answer against a from-scratch BFS on the current edge set.

    Args:
        n: Number of users
        operations: Total deletions plus queries
        seed: Seed or Generator
        delete_fraction: Probability that an operation is a deletion
        density: Sparsifier density

    Returns:
        FuzzReport with the mismatch count
    """
    rng = as_generator(seed)
    start = time.perf_counter()
    graph = init_sparsified(n, rng, density=density)
    remaining = list(graph.edges())
    initial_edges = len(remaining)

    labels = _labels(n, bfs_components(n, graph.adjacency))
    mismatches = 0
    deletions = queries = 0
    for _ in range(operations):
        if remaining and rng.random() < delete_fraction:
            pos = int(rng.integers(len(remaining)))
            remaining[pos], remaining[-1] = remaining[-1], remaining[pos]
            u, v = remaining.pop()
            graph.delete_edge(u, v)
            deletions += 1
            oracle = bfs_components(n, graph.adjacency)
            labels = _labels(n, oracle)
            if _partition(graph.components_of()) != _partition(oracle):
                mismatches += 1
        else:
            i, l = (int(k) for k in rng.integers(n, size=2))
            queries += 1
            if graph.is_connected(i, l) != (labels[i] == labels[l]):
                mismatches += 1

    report = FuzzReport(
        n=n,
        initial_edges=initial_edges,
        deletions=deletions,
        queries=queries,
        mismatches=mismatches,
        final_clusters=graph.m,
        seconds=time.perf_counter() - start,
    )
    logger.info(
        f"Connectivity fuzz: {deletions} deletions, {queries} queries, "
        f"{mismatches} mismatches in {report.seconds:.2f}s"
    )
    return report


def _labels(n: int, components: List[Set[int]]) -> np.ndarray:
    labels = np.empty(n, dtype=np.int64)
    for label, component in enumerate(components):
        for node in component:
            labels[node] = label
    return labels


def _partition(components: Iterable[Set[int]]) -> Set[FrozenSet[int]]:
    return {frozenset(c) for c in components}
