"""
BanditPhoenix user graph.
Decremental connectivity, cluster bookkeeping and exploratory splits.
"""

from .split import (
    SplitPlan,
    apply_split,
    bisect_component,
    fiedler_vector,
    median_split,
)
from .user_graph import (
    DENSE_THRESHOLD,
    FuzzReport,
    SplitEvent,
    UserGraph,
    bfs_components,
    fuzz_against_oracle,
    init_complete,
    init_sparsified,
)

__all__ = [
    "DENSE_THRESHOLD",
    "FuzzReport",
    "SplitEvent",
    "SplitPlan",
    "UserGraph",
    "apply_split",
    "bfs_components",
    "bisect_component",
    "fiedler_vector",
    "fuzz_against_oracle",
    "init_complete",
    "init_sparsified",
    "median_split",
]
