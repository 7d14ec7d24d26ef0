"""
Small helpers shared across BanditPhoenix: seeding, logging setup and
checksums.
"""

import hashlib
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Return a Generator for an int seed, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_generators(
    seed: Optional[int], count: int
) -> List[np.random.Generator]:
    """
    Derive independent generators from one seed.

    Args:
        seed: Root seed of a run
        count: Number of generators to derive

    Returns:
        List of generators whose streams do not overlap
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def setup_logging(verbose: bool = False) -> None:
    """Install a single console handler for the CLI."""
    logging.basicConfig(
        level=logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    level = logging.DEBUG if verbose else logging.INFO
    logging.getLogger("banditphoenix").setLevel(level)
    logging.getLogger("src.banditphoenix").setLevel(level)


def file_fingerprint(path: Union[str, Path], *extra: object) -> str:
    """
    MD5 of a file's bytes followed by any extra build parameters.

    Args:
        path: File to hash
        extra: Parameters that change the derived artifact

    Returns:
        Hex digest
    """
    digest = hashlib.md5()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    for item in extra:
        digest.update(repr(item).encode("utf-8"))
    return digest.hexdigest()


class StreamChecksum:
    """Running MD5 over the rounds a policy was shown."""

    def __init__(self) -> None:
        self._digest = hashlib.md5()

    def add(self, user: int, *arrays: np.ndarray) -> None:
        self._digest.update(int(user).to_bytes(8, "little", signed=True))
        for array in arrays:
            self._digest.update(np.ascontiguousarray(array).tobytes())

    def hexdigest(self) -> str:
        return self._digest.hexdigest()
