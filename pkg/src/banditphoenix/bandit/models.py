"""
Data models for per-user and per-cluster linear bandit estimators.
"""

from dataclasses import dataclass, field
from typing import Optional, Set

import numpy as np


@dataclass
class BanditState:
    """Least-squares state of one user.

    ``corr`` is the forward matrix M = I + sum of x x^T over the user's
    served rounds, ``inv_corr`` its inverse, ``weight`` = inv_corr @ bias.
    """

    inv_corr: np.ndarray
    corr: np.ndarray
    bias: np.ndarray
    weight: np.ndarray
    serve_count: int = 0

    @classmethod
    def fresh(cls, dimension: int) -> "BanditState":
        return cls(
            inv_corr=np.eye(dimension),
            corr=np.eye(dimension),
            bias=np.zeros(dimension),
            weight=np.zeros(dimension),
        )

    @property
    def dimension(self) -> int:
        return self.bias.shape[0]

    def copy(self) -> "BanditState":
        return BanditState(
            inv_corr=self.inv_corr.copy(),
            corr=self.corr.copy(),
            bias=self.bias.copy(),
            weight=self.weight.copy(),
            serve_count=self.serve_count,
        )


@dataclass
class ClusterAggregate:
    """Pooled estimator over the members of one cluster."""

    members: Set[int]
    agg_inv: np.ndarray
    agg_corr: np.ndarray
    agg_bias: np.ndarray
    agg_weight: np.ndarray
    update_count: int = 0  # updates since the last rebuild

    @classmethod
    def of_state(cls, user: int, state: BanditState) -> "ClusterAggregate":
        """Singleton view sharing the arrays of ``state`` (no copies)."""
        return cls(
            members={user},
            agg_inv=state.inv_corr,
            agg_corr=state.corr,
            agg_bias=state.bias,
            agg_weight=state.weight,
            update_count=state.serve_count,
        )

    @property
    def dimension(self) -> int:
        return self.agg_bias.shape[0]


@dataclass
class ContextSet:
    """Candidate items offered in one round, one row per item."""

    vectors: np.ndarray
    round: int
    item_ids: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if self.item_ids is not None:
            self.item_ids = np.asarray(self.item_ids, dtype=np.int64)

    @property
    def size(self) -> int:
        return 0 if self.vectors.size == 0 else self.vectors.shape[0]

    def __len__(self) -> int:
        return self.size
