from .helpers import (
    SeedLike,
    StreamChecksum,
    as_generator,
    file_fingerprint,
    setup_logging,
    spawn_generators,
)

__all__ = [
    "SeedLike",
    "StreamChecksum",
    "as_generator",
    "file_fingerprint",
    "setup_logging",
    "spawn_generators",
]
