"""
Replay rounds built from a logged dataset, and the metrics scored on
them.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Union

import numpy as np

from ..bandit.models import ContextSet
from ..errors import IngestError
from ..policies.models import RoundRecord
from ..utils.helpers import SeedLike, as_generator
from .features import ItemFeatureTable
from .movielens import InteractionLog

logger = logging.getLogger(__name__)

DEFAULT_CONTEXT_SIZE = 25


@dataclass
class ReplayRound:
    """One logged positive and the candidate set built around it."""

    round: int
    user: int
    candidate_ids: np.ndarray
    payoffs: np.ndarray

    @property
    def size(self) -> int:
        return int(self.candidate_ids.shape[0])

    @property
    def positive(self) -> int:
        return int(np.argmax(self.payoffs))

    def context(
        self, features: ItemFeatureTable, t: Optional[int] = None
    ) -> ContextSet:
        return ContextSet(
            vectors=features.vectors[self.candidate_ids],
            round=self.round if t is None else t,
            item_ids=self.candidate_ids,
        )


def build_context_sets(
    log: InteractionLog,
    features: ItemFeatureTable,
    c: int = DEFAULT_CONTEXT_SIZE,
    seed: SeedLike = None,
    max_rounds: Optional[int] = None,
) -> List[ReplayRound]:
    """
    Turn every positive event into a candidate set.

    The logged item is the only payoff-1 candidate; the other c - 1 are
    drawn without replacement from items whose first log occurrence is
    no later than the event. The positive's slot is random. When fewer
    than c items are available the set shrinks to what is available.

    Args:
        log: Binarized interaction log
        features: Feature table covering every item of the log
        c: Target candidate-set size
        seed: Seed or Generator for the sampling
        max_rounds: Stop after this many rounds

    Returns:
        Rounds in log order, numbered from 0

    Raises:
        IngestError: on a non-binary log, missing features or c < 1
    """
    if c < 1:
        raise IngestError(f"Context size must be positive, got {c}")
    if not np.isin(log.ratings, (0.0, 1.0)).all():
        raise IngestError("Replay needs binary payoffs; binarize first")
    if len(features) != log.n_items:
        raise IngestError(
            f"Feature table has {len(features)} rows for "
            f"{log.n_items} items"
        )

    rng = as_generator(seed)
    first_seen = np.full(log.n_items, np.iinfo(np.int64).max)
    np.minimum.at(first_seen, log.items, log.timestamps)
    by_arrival = np.argsort(first_seen, kind="stable")
    slot = np.empty(log.n_items, dtype=np.int64)
    slot[by_arrival] = np.arange(log.n_items)

    rounds: List[ReplayRound] = []
    available = 0
    clamped = 0
    for user, item, payoff, stamp in zip(
        log.users, log.items, log.ratings, log.timestamps
    ):
        while (
            available < log.n_items
            and first_seen[by_arrival[available]] <= stamp
        ):
            available += 1
        if payoff != 1.0:
            continue

        size = min(c, available)
        clamped += size < c
        draws = rng.choice(available - 1, size=size - 1, replace=False)
        draws = draws + (draws >= slot[item])
        candidates = np.insert(
            by_arrival[draws], int(rng.integers(size)), item
        ).astype(np.int64)
        payoffs = np.zeros(size)
        payoffs[candidates == item] = 1.0

        rounds.append(
            ReplayRound(
                round=len(rounds),
                user=int(user),
                candidate_ids=candidates,
                payoffs=payoffs,
            )
        )
        if max_rounds is not None and len(rounds) >= max_rounds:
            break

    logger.info(
        f"Built {len(rounds)} replay rounds with c={c} "
        f"({clamped} shrunk to the available items)"
    )
    return rounds


def replay_regret(replay_round: ReplayRound, chosen: int) -> float:
    """Best logged payoff in the set minus the chosen one's."""
    if not 0 <= chosen < replay_round.size:
        raise IngestError(
            f"Choice {chosen} outside a set of {replay_round.size}"
        )
    payoffs = replay_round.payoffs
    return float(payoffs.max() - payoffs[chosen])


def ctr(records: Iterable[Union[RoundRecord, float]]) -> float:
    """
    Click-through rate: mean binary payoff over the rounds.

    Raises:
        IngestError: on an empty sequence or a non-binary payoff
    """
    payoffs = np.asarray(
        [
            r.payoff if isinstance(r, RoundRecord) else float(r)
            for r in records
        ],
        dtype=float,
    )
    if payoffs.size == 0:
        raise IngestError("CTR of zero rounds is undefined")
    if not np.isin(payoffs, (0.0, 1.0)).all():
        raise IngestError("CTR needs payoffs in {0, 1}")
    return float(payoffs.mean())
