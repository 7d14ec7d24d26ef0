"""
BanditPhoenix data ingest.
Rating logs, item features and replay rounds.
"""

from .download import ML_100K_URL, fetch_movielens
from .features import ItemFeatureTable, pca_standardize
from .movielens import (
    ActivityProfile,
    InteractionLog,
    activity_profile,
    binarize_payoffs,
    load_feature_matrix,
    load_item_features,
    load_movielens,
)
from .replay import (
    DEFAULT_CONTEXT_SIZE,
    ReplayRound,
    build_context_sets,
    ctr,
    replay_regret,
)

__all__ = [
    "DEFAULT_CONTEXT_SIZE",
    "ML_100K_URL",
    "ActivityProfile",
    "InteractionLog",
    "ItemFeatureTable",
    "ReplayRound",
    "activity_profile",
    "binarize_payoffs",
    "build_context_sets",
    "ctr",
    "fetch_movielens",
    "load_feature_matrix",
    "load_item_features",
    "load_movielens",
    "pca_standardize",
    "replay_regret",
]
