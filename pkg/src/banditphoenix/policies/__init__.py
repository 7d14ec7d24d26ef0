"""
BanditPhoenix policies.
CLUB, GCLUB and the reference baselines behind one step interface.
"""

from typing import Dict, Tuple, Type

from ..errors import PolicyError
from .base import Policy
from .baselines import (
    ItemTable,
    LinUcbIndPolicy,
    LinUcbOnePolicy,
    RandomPolicy,
    Ucb1IndPolicy,
    Ucb1OnePolicy,
    random_step,
)
from .club import ClubPolicy, GClubPolicy
from .models import ClusterChange, PolicyConfig, RoundRecord

POLICIES: Dict[str, Type[Policy]] = {
    cls.name: cls
    for cls in (
        ClubPolicy,
        GClubPolicy,
        LinUcbOnePolicy,
        LinUcbIndPolicy,
        Ucb1OnePolicy,
        Ucb1IndPolicy,
        RandomPolicy,
    )
}
POLICY_NAMES: Tuple[str, ...] = tuple(POLICIES)

# Parameters each policy actually reads; only these are grid-searched
TUNABLE: Dict[str, Tuple[str, ...]] = {
    "club": ("alpha", "alpha2"),
    "gclub": ("alpha", "alpha2", "split_prob"),
    "linucb-one": ("alpha",),
    "linucb-ind": ("alpha",),
    "ucb-one": (),
    "ucb-ind": (),
    "ran": (),
}


def make_policy(name: str, n_users: int, config: PolicyConfig) -> Policy:
    """
    Instantiate a policy by its CLI name.

    Raises:
        PolicyError: for an unknown name
    """
    try:
        cls = POLICIES[name]
    except KeyError:
        raise PolicyError(
            f"Unknown policy '{name}'; expected one of "
            f"{', '.join(POLICY_NAMES)}"
        ) from None
    return cls(n_users, config)


__all__ = [
    "POLICIES",
    "POLICY_NAMES",
    "TUNABLE",
    "ClubPolicy",
    "ClusterChange",
    "GClubPolicy",
    "ItemTable",
    "LinUcbIndPolicy",
    "LinUcbOnePolicy",
    "Policy",
    "PolicyConfig",
    "RandomPolicy",
    "RoundRecord",
    "Ucb1IndPolicy",
    "Ucb1OnePolicy",
    "make_policy",
    "random_step",
]
