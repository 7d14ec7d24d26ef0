"""
BanditPhoenix bandit core.
Per-user least squares, cluster aggregation and item selection.
"""

from .core import (
    REFRESH_INTERVAL,
    absorb_update,
    build_aggregate,
    confidence_width,
    confidence_widths,
    deletion_threshold,
    rank_one_update,
    select_item,
    spd_inverse,
)
from .models import BanditState, ClusterAggregate, ContextSet

__all__ = [
    "REFRESH_INTERVAL",
    "BanditState",
    "ClusterAggregate",
    "ContextSet",
    "absorb_update",
    "build_aggregate",
    "confidence_width",
    "confidence_widths",
    "deletion_threshold",
    "rank_one_update",
    "select_item",
    "spd_inverse",
]
