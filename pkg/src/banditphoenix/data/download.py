"""
Download of the public MovieLens 100k archive.
"""

import io
import logging
import zipfile
from pathlib import Path
from typing import Tuple, Union

import requests

from ..errors import DownloadError

logger = logging.getLogger(__name__)

ML_100K_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
MEMBERS = ("u.data", "u.item")


def fetch_movielens(
    dest_dir: Union[str, Path],
    url: str = ML_100K_URL,
    timeout: float = 60.0,
    force: bool = False,
) -> Tuple[Path, Path]:
    """
    Fetch u.data and u.item into ``dest_dir``.

    Args:
        dest_dir: Target directory, created if needed
        url: Archive location
        timeout: HTTP timeout in seconds
        force: Download even if both files exist

    Returns:
        Paths of u.data and u.item

    Raises:
        DownloadError: on HTTP failure or an archive without the files
    """
    dest = Path(dest_dir)
    targets = tuple(dest / name for name in MEMBERS)
    if not force and all(path.exists() for path in targets):
        logger.info(f"MovieLens files already present in {dest}")
        return targets[0], targets[1]

    logger.info(f"Downloading {url}")
    try:
        response = requests.get(url, timeout=timeout)
        response.raise_for_status()
    except requests.RequestException as e:
        raise DownloadError(f"Download of {url} failed: {e}") from e

    try:
        with zipfile.ZipFile(io.BytesIO(response.content)) as archive:
            by_name = {Path(info).name: info for info in archive.namelist()}
            missing = [name for name in MEMBERS if name not in by_name]
            if missing:
                raise DownloadError(
                    f"Archive from {url} lacks {', '.join(missing)}"
                )
            dest.mkdir(parents=True, exist_ok=True)
            for name, target in zip(MEMBERS, targets):
                target.write_bytes(archive.read(by_name[name]))
    except zipfile.BadZipFile as e:
        raise DownloadError(f"{url} did not return a zip archive: {e}") from e
    except OSError as e:
        raise DownloadError(f"Cannot write into {dest}: {e}") from e

    logger.info(f"MovieLens files written to {dest}")
    return targets[0], targets[1]
