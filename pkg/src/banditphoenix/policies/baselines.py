"""
Reference policies: LinUCB with one shared or per-user estimator,
featureless UCB1 and uniform random choice.
"""

import logging
import math
from typing import Dict, List

import numpy as np

from ..bandit.core import rank_one_update, select_item
from ..bandit.models import BanditState, ClusterAggregate, ContextSet
from ..errors import PolicyError
from ..utils.helpers import SeedLike, as_generator
from .base import Policy
from .models import PolicyConfig

logger = logging.getLogger(__name__)


class LinUcbOnePolicy(Policy):
    """A single LinUCB estimator serving every user."""

    name = "linucb-one"

    def __init__(self, n_users: int, config: PolicyConfig):
        super().__init__(n_users, config)
        self.state = BanditState.fresh(config.dimension)

    def select(self, user: int, ctx: ContextSet) -> int:
        self._check_user(user)
        view = ClusterAggregate.of_state(user, self.state)
        return select_item(view, ctx, self.config.alpha)

    def observe(
        self, user: int, ctx: ContextSet, chosen: int, payoff: float
    ) -> None:
        rank_one_update(self.state, ctx.vectors[chosen], payoff)


class LinUcbIndPolicy(Policy):
    """One independent LinUCB estimator per user."""

    name = "linucb-ind"

    def __init__(self, n_users: int, config: PolicyConfig):
        super().__init__(n_users, config)
        self.states: List[BanditState] = [
            BanditState.fresh(config.dimension) for _ in range(n_users)
        ]

    @property
    def cluster_count(self) -> int:
        return self.n_users

    def select(self, user: int, ctx: ContextSet) -> int:
        self._check_user(user)
        view = ClusterAggregate.of_state(user, self.states[user])
        return select_item(view, ctx, self.config.alpha)

    def observe(
        self, user: int, ctx: ContextSet, chosen: int, payoff: float
    ) -> None:
        self._check_user(user)
        rank_one_update(self.states[user], ctx.vectors[chosen], payoff)


class ItemTable:
    """Pull counts and payoff sums keyed by item id."""

    def __init__(self) -> None:
        self.counts: Dict[int, int] = {}
        self.sums: Dict[int, float] = {}
        self.total = 0

    def choose(self, item_ids: np.ndarray) -> int:
        """
        UCB1 choice: the first never-pulled item, otherwise the argmax
        of mean + sqrt(2 ln t / count) with t the table's total pulls.
        """
        ids = [int(item) for item in item_ids]
        for position, item in enumerate(ids):
            if self.counts.get(item, 0) == 0:
                return position
        log_total = math.log(self.total)
        scores = [
            self.sums[item] / self.counts[item]
            + math.sqrt(2.0 * log_total / self.counts[item])
            for item in ids
        ]
        return int(np.argmax(scores))

    def record(self, item: int, payoff: float) -> None:
        self.counts[item] = self.counts.get(item, 0) + 1
        self.sums[item] = self.sums.get(item, 0.0) + payoff
        self.total += 1


def _item_ids(ctx: ContextSet) -> np.ndarray:
    if ctx.item_ids is None:
        raise PolicyError(
            f"Round {ctx.round}: UCB1 needs item ids on every context set"
        )
    if len(ctx.item_ids) == 0:
        raise PolicyError(f"Round {ctx.round}: context set is empty")
    return ctx.item_ids


class Ucb1OnePolicy(Policy):
    """Featureless UCB1 with one item table shared by all users."""

    name = "ucb-one"

    def __init__(self, n_users: int, config: PolicyConfig):
        super().__init__(n_users, config)
        self.table = ItemTable()

    def select(self, user: int, ctx: ContextSet) -> int:
        self._check_user(user)
        return self.table.choose(_item_ids(ctx))

    def observe(
        self, user: int, ctx: ContextSet, chosen: int, payoff: float
    ) -> None:
        self.table.record(int(_item_ids(ctx)[chosen]), payoff)


class Ucb1IndPolicy(Policy):
    """Featureless UCB1 with one item table per user."""

    name = "ucb-ind"

    def __init__(self, n_users: int, config: PolicyConfig):
        super().__init__(n_users, config)
        self.tables: List[ItemTable] = [
            ItemTable() for _ in range(n_users)
        ]

    @property
    def cluster_count(self) -> int:
        return self.n_users

    def select(self, user: int, ctx: ContextSet) -> int:
        self._check_user(user)
        return self.tables[user].choose(_item_ids(ctx))

    def observe(
        self, user: int, ctx: ContextSet, chosen: int, payoff: float
    ) -> None:
        self._check_user(user)
        self.tables[user].record(int(_item_ids(ctx)[chosen]), payoff)


def random_step(ctx: ContextSet, rng: np.random.Generator) -> int:
    """Uniform choice over the indices of a nonempty context set."""
    if ctx.size == 0:
        raise PolicyError(f"Round {ctx.round}: context set is empty")
    return int(rng.integers(ctx.size))


class RandomPolicy(Policy):
    """Chooses uniformly at random; the reference for every ratio."""

    name = "ran"

    def __init__(
        self, n_users: int, config: PolicyConfig, seed: SeedLike = None
    ):
        super().__init__(n_users, config)
        self.rng = as_generator(config.seed if seed is None else seed)

    def select(self, user: int, ctx: ContextSet) -> int:
        self._check_user(user)
        return random_step(ctx, self.rng)

    def observe(
        self, user: int, ctx: ContextSet, chosen: int, payoff: float
    ) -> None:
        pass
