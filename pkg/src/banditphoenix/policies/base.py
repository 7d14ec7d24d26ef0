"""
Uniform step interface shared by every policy.
"""

from abc import ABC, abstractmethod
from functools import partial
from typing import Callable, Tuple

from ..bandit.models import ContextSet
from ..errors import PolicyError
from .models import PolicyConfig


class Policy(ABC):
    """
    A decision procedure over a population of users.

    ``select`` picks an index in the context set; ``observe`` feeds the
    payoff of that choice back. ``step`` bundles the two into a choice
    and a post-payoff hook.
    """

    name = ""

    def __init__(self, n_users: int, config: PolicyConfig):
        if n_users < 1:
            raise PolicyError(f"Need at least one user, got {n_users}")
        self.n_users = n_users
        self.config = config

    @abstractmethod
    def select(self, user: int, ctx: ContextSet) -> int:
        """Index of the item to recommend to ``user``."""

    @abstractmethod
    def observe(
        self, user: int, ctx: ContextSet, chosen: int, payoff: float
    ) -> None:
        """Feed back the payoff of the chosen item."""

    def step(
        self, user: int, ctx: ContextSet
    ) -> Tuple[int, Callable[[float], None]]:
        chosen = self.select(user, ctx)
        return chosen, partial(self.observe, user, ctx, chosen)

    @property
    def cluster_count(self) -> int:
        """Number of user groups the policy currently distinguishes."""
        return 1

    def _check_user(self, user: int) -> None:
        if not 0 <= user < self.n_users:
            raise PolicyError(
                f"User id {user} out of range [0, {self.n_users})"
            )
