"""
Item feature reduction: PCA to a target share of explained variance
followed by per-column standardization.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.decomposition import PCA
from sklearn.preprocessing import StandardScaler

from ..errors import IngestError

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12


@dataclass
class ItemFeatureTable:
    """Standardized d-vectors indexed by dense item id."""

    vectors: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each component so its first nonzero entry is positive."""
    fixed = components.copy()
    for row in fixed:
        nonzero = np.flatnonzero(np.abs(row) > RANK_TOLERANCE)
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.0
    return fixed


def pca_standardize(
    features: np.ndarray,
    variance_fraction: float = 0.95,
    seed: Optional[int] = None,
) -> ItemFeatureTable:
    """
    Reduce raw item features and normalize them.

    Keeps the smallest number of principal components whose cumulative
    explained variance reaches ``variance_fraction``, then scales every
    kept column to zero mean and unit variance.

    Args:
        features: Raw item x feature matrix
        variance_fraction: Share of variance to retain, in (0, 1]
        seed: Passed to the PCA solver

    Returns:
        ItemFeatureTable

    Raises:
        IngestError: on fewer than two items, an invalid fraction or
            input without variance
    """
    raw = np.atleast_2d(np.asarray(features, dtype=float))
    if raw.shape[0] < 2:
        raise IngestError(f"Need at least 2 items, got {raw.shape[0]}")
    if not 0.0 < variance_fraction <= 1.0:
        raise IngestError(
            f"variance_fraction must lie in (0, 1], got {variance_fraction}"
        )
    if not np.isfinite(raw).all():
        raise IngestError("Feature matrix has non-finite entries")
    if float(np.ptp(raw, axis=0).max()) <= RANK_TOLERANCE:
        raise IngestError("Feature matrix has rank 0: every row is equal")

    pca = PCA(svd_solver="full", random_state=seed).fit(raw)
    ratios = pca.explained_variance_ratio_
    cumulative = np.cumsum(ratios)
    kept = int(np.searchsorted(cumulative, variance_fraction - 1e-12)) + 1
    kept = min(kept, ratios.shape[0])

    components = _fix_signs(pca.components_[:kept])
    projected = (raw - pca.mean_) @ components.T
    vectors = StandardScaler().fit_transform(projected)

    logger.info(
        f"PCA kept {kept} of {raw.shape[1]} dimensions "
        f"({cumulative[kept - 1]:.3f} of the variance)"
    )
    return ItemFeatureTable(
        vectors=vectors,
        components=components,
        explained_variance_ratio=ratios[:kept].copy(),
    )
