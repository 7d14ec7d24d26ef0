"""
Exception hierarchy for BanditPhoenix.
Every sub-package raises its own subclass of PhoenixError.
"""


class PhoenixError(Exception):
    """Base class for all BanditPhoenix errors."""

    pass


class BanditError(PhoenixError):
    """Invalid input to the linear bandit core."""

    pass


class GraphError(PhoenixError):
    """Invalid operation on the user graph."""

    pass


class SplitError(PhoenixError):
    """A cluster cannot be bisected or a split plan is stale."""

    pass


class PolicyError(PhoenixError):
    """Invalid policy configuration or round input."""

    pass


class SyntheticEnvError(PhoenixError):
    """The synthetic environment cannot be constructed."""

    pass


class IngestError(PhoenixError):
    """Dataset files cannot be parsed or features cannot be built."""

    pass


class DownloadError(PhoenixError):
    """Dataset download or extraction failed."""

    pass


class CacheError(PhoenixError):
    """Replay cache operation failed."""

    pass


class ConfigError(PhoenixError):
    """Experiment configuration is invalid."""

    pass


class HarnessError(PhoenixError):
    """An experiment run violated its pairing or window contract."""

    pass
