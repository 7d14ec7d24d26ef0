"""
Data models shared by the decision policies.
"""

from dataclasses import dataclass, field
from typing import Optional

from ..errors import PolicyError
from ..graph.user_graph import SplitEvent


@dataclass
class PolicyConfig:
    """Tunable parameters of every policy.

    ``alpha2=None`` couples the deletion parameter to ``alpha``.
    """

    alpha: float = 0.2
    alpha2: Optional[float] = None
    split_prob: float = 0.2
    cold_start_fraction: float = 0.1
    horizon: int = 1000
    dimension: int = 10
    seed: Optional[int] = 0
    graph: str = "sparse"  # "sparse" or "complete"
    graph_density: float = 3.0

    def __post_init__(self):
        if self.alpha2 is None:
            self.alpha2 = self.alpha
        if self.alpha <= 0:
            raise PolicyError(f"alpha must be positive, got {self.alpha}")
        if self.alpha2 <= 0:
            raise PolicyError(f"alpha2 must be positive, got {self.alpha2}")
        if not 0.0 <= self.split_prob < 0.5:
            raise PolicyError(
                f"split_prob must lie in [0, 1/2), got {self.split_prob}"
            )
        if not 0.0 <= self.cold_start_fraction <= 1.0:
            raise PolicyError(
                "cold_start_fraction must lie in [0, 1], got "
                f"{self.cold_start_fraction}"
            )
        if self.horizon < 1:
            raise PolicyError(f"horizon must be positive, got {self.horizon}")
        if self.dimension < 1:
            raise PolicyError(
                f"dimension must be positive, got {self.dimension}"
            )
        if self.graph not in ("sparse", "complete"):
            raise PolicyError(f"Unknown graph initialization: {self.graph}")


@dataclass
class RoundRecord:
    """One interaction as seen by the harness."""

    round: int
    user: int
    chosen: int
    payoff: float
    instant_regret: float
    cluster_count: int

    def __post_init__(self):
        if not -1.0 <= self.payoff <= 1.0:
            raise PolicyError(f"Payoff {self.payoff} outside [-1, 1]")
        if self.instant_regret < 0:
            raise PolicyError(f"Negative regret {self.instant_regret}")


@dataclass(frozen=True)
class ClusterChange:
    """A split recorded by a clustering policy."""

    round: int
    cause: str  # "deletion" or "exploration"
    event: SplitEvent = field(compare=False)
