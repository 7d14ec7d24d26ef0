"""
Linear bandit core: rank-one inverse maintenance, cluster aggregation
and upper-confidence item selection.
"""

import logging
import math
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ..errors import BanditError
from .models import BanditState, ClusterAggregate, ContextSet

logger = logging.getLogger(__name__)

# Full re-inversion period, per user and per aggregate
REFRESH_INTERVAL = 10_000

StateLookup = Union[Sequence[BanditState], Mapping[int, BanditState]]


def _as_finite_vector(x, dimension: int) -> np.ndarray:
    vector = np.asarray(x, dtype=float).reshape(-1)
    if vector.shape[0] != dimension:
        raise BanditError(
            f"Expected a {dimension}-vector, got shape {vector.shape}"
        )
    if not np.isfinite(vector).all():
        raise BanditError("Context vector has non-finite entries")
    return vector


def _sherman_morrison(inv: np.ndarray, x: np.ndarray) -> None:
    """In place: inv <- (inv^-1 + x x^T)^-1."""
    mx = inv @ x
    denom = 1.0 + float(x @ mx)
    inv -= np.outer(mx, mx) / denom


def spd_inverse(matrix: np.ndarray) -> np.ndarray:
    """
    Invert a symmetric positive definite matrix via Cholesky.

    Args:
        matrix: d x d SPD matrix

    Returns:
        Symmetric inverse

    Raises:
        BanditError: if the matrix is not positive definite
    """
    try:
        factor = cho_factor(matrix, lower=False)
    except (LinAlgError, ValueError) as e:
        raise BanditError(f"Matrix is not positive definite: {e}") from e
    inverse = cho_solve(factor, np.eye(matrix.shape[0]))
    return (inverse + inverse.T) / 2.0


def rank_one_update(
    state: BanditState, x: np.ndarray, payoff: float
) -> BanditState:
    """
    Fold one served round into a user's state, in place.

    Args:
        state: The user's state
        x: Context vector of the served item
        payoff: Observed payoff

    Returns:
        The same state object, updated
    """
    vector = _as_finite_vector(x, state.dimension)
    if not math.isfinite(payoff):
        raise BanditError(f"Payoff must be finite, got {payoff}")

    _sherman_morrison(state.inv_corr, vector)
    state.corr += np.outer(vector, vector)
    state.bias += payoff * vector
    state.serve_count += 1
    if state.serve_count % REFRESH_INTERVAL == 0:
        state.inv_corr = spd_inverse(state.corr)
    state.weight = state.inv_corr @ state.bias
    return state


def absorb_update(
    agg: ClusterAggregate, x: np.ndarray, payoff: float
) -> ClusterAggregate:
    """Apply the same rank-one step to a cluster's pooled estimator."""
    vector = _as_finite_vector(x, agg.dimension)
    _sherman_morrison(agg.agg_inv, vector)
    agg.agg_corr += np.outer(vector, vector)
    agg.agg_bias += payoff * vector
    agg.update_count += 1
    if agg.update_count % REFRESH_INTERVAL == 0:
        agg.agg_inv = spd_inverse(agg.agg_corr)
    agg.agg_weight = agg.agg_inv @ agg.agg_bias
    return agg


def build_aggregate(
    member_states: StateLookup, members: Iterable[int]
) -> ClusterAggregate:
    """
    Pool member states into one cluster estimator.

    M_bar = I + sum_i (M_i - I), b_bar = sum_i b_i, inverted once.

    Args:
        member_states: User id -> state lookup
        members: User ids of the cluster

    Returns:
        Fresh ClusterAggregate
    """
    member_set = set(members)
    if not member_set:
        raise BanditError("Cannot aggregate an empty member set")

    ordered = sorted(member_set)
    if len(ordered) == 1:
        # a singleton pools nothing: copy the user's state exactly
        state = member_states[ordered[0]].copy()
        return ClusterAggregate(
            members=member_set,
            agg_inv=state.inv_corr,
            agg_corr=state.corr,
            agg_bias=state.bias,
            agg_weight=state.weight,
            update_count=state.serve_count,
        )

    dimension = member_states[ordered[0]].dimension
    corr = np.zeros((dimension, dimension))
    bias = np.zeros(dimension)
    for user in ordered:
        state = member_states[user]
        corr += state.corr
        bias += state.bias
    corr -= (len(ordered) - 1) * np.eye(dimension)

    inverse = spd_inverse(corr)
    return ClusterAggregate(
        members=member_set,
        agg_inv=inverse,
        agg_corr=corr,
        agg_bias=bias,
        agg_weight=inverse @ bias,
    )


def confidence_width(
    x: np.ndarray, agg: ClusterAggregate, t: float, alpha: float
) -> float:
    """alpha * sqrt(x^T M_bar^-1 x * log(t + 1))."""
    if alpha <= 0:
        raise BanditError(f"alpha must be positive, got {alpha}")
    if t < 0:
        raise BanditError(f"Round index must be non-negative, got {t}")
    vector = _as_finite_vector(x, agg.dimension)
    quad = max(float(vector @ agg.agg_inv @ vector), 0.0)
    return alpha * math.sqrt(quad * math.log(t + 1))


def confidence_widths(
    vectors: np.ndarray, inverse: np.ndarray, t: float, alpha: float
) -> np.ndarray:
    """Vectorized confidence_width over the rows of ``vectors``."""
    quad = np.einsum("kd,de,ke->k", vectors, inverse, vectors)
    return alpha * np.sqrt(np.maximum(quad, 0.0) * math.log(t + 1))


def select_item(
    agg: ClusterAggregate, ctx: ContextSet, alpha: float
) -> int:
    """
    Upper-confidence choice within a context set.

    Ties go to the lowest index.

    Args:
        agg: Estimator of the serving cluster
        ctx: Candidate items of the round
        alpha: Exploration parameter

    Returns:
        Index of the chosen item
    """
    if ctx.size == 0:
        raise BanditError("Context set is empty")
    if alpha <= 0:
        raise BanditError(f"alpha must be positive, got {alpha}")
    vectors = ctx.vectors
    if vectors.shape[1] != agg.dimension:
        raise BanditError(
            f"Context dimension {vectors.shape[1]} does not match "
            f"estimator dimension {agg.dimension}"
        )
    if not np.isfinite(vectors).all():
        raise BanditError("Context set has non-finite entries")

    scores = vectors @ agg.agg_weight + confidence_widths(
        vectors, agg.agg_inv, ctx.round, alpha
    )
    return int(np.argmax(scores))


def deletion_threshold(serve_count, alpha2: float):
    """
    Edge-deletion radius alpha2 * sqrt((1 + log(1 + T)) / (1 + T)).

    Accepts a scalar or an array of serve counts.
    """
    if alpha2 <= 0:
        raise BanditError(f"alpha2 must be positive, got {alpha2}")
    counts = np.asarray(serve_count, dtype=float)
    if np.any(counts < 0):
        raise BanditError("Serve counts must be non-negative")
    radius = alpha2 * np.sqrt((1.0 + np.log1p(counts)) / (1.0 + counts))
    if radius.ndim == 0:
        return float(radius)
    return radius
