"""
MovieLens-style rating logs: parsing, dense id mapping, binary payoffs
and raw item features.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..errors import IngestError

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("user", "item", "rating", "timestamp")
GENRE_COUNT = 19
# u.item: id | title | release date | video release | url | 19 genre flags
ITEM_COLUMNS = 5 + GENRE_COUNT


@dataclass
class InteractionLog:
    """Timestamp-ordered rating events with dense ids.

    ``user_ids[u]`` and ``item_ids[i]`` give the raw id behind dense ids
    u and i.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    timestamps: np.ndarray
    user_ids: np.ndarray
    item_ids: np.ndarray
    binary: bool = False

    @property
    def n_users(self) -> int:
        return int(self.user_ids.shape[0])

    @property
    def n_items(self) -> int:
        return int(self.item_ids.shape[0])

    def __len__(self) -> int:
        return int(self.users.shape[0])

    @classmethod
    def empty(cls) -> "InteractionLog":
        ints = np.zeros(0, dtype=np.int64)
        return cls(
            users=ints,
            items=ints.copy(),
            ratings=np.zeros(0),
            timestamps=ints.copy(),
            user_ids=ints.copy(),
            item_ids=ints.copy(),
        )


@dataclass(frozen=True)
class ActivityProfile:
    """Per-user event counts, most active first."""

    counts: np.ndarray
    top_decile_share: float


def _bad_line(path: Path, frame: pd.DataFrame, mask: np.ndarray) -> None:
    if mask.any():
        row = int(np.flatnonzero(mask)[0])
        raw = "\t".join(str(v) for v in frame.iloc[row].tolist())
        raise IngestError(f"{path}: malformed line {row + 1}: {raw!r}")


def load_movielens(path: Union[str, Path]) -> InteractionLog:
    """
    Parse a tab-separated rating log (user, item, rating, timestamp).

    Args:
        path: Path of a u.data style file

    Returns:
        InteractionLog sorted by timestamp (stable), ids dense-mapped in
        increasing raw id order

    Raises:
        IngestError: on a malformed line, naming its line number
    """
    path = Path(path)
    try:
        if path.stat().st_size == 0:
            logger.info(f"{path} is empty")
            return InteractionLog.empty()
        frame = pd.read_csv(
            path,
            sep="\t",
            header=None,
            dtype=str,
            skip_blank_lines=False,
        )
    except OSError as e:
        raise IngestError(f"Cannot read {path}: {e}") from e
    except pd.errors.ParserError as e:
        raise IngestError(f"{path}: malformed input: {e}") from e

    if frame.shape[1] != len(LOG_COLUMNS):
        raise IngestError(
            f"{path}: malformed line 1: expected {len(LOG_COLUMNS)} "
            f"tab-separated fields, got {frame.shape[1]}"
        )
    frame.columns = list(LOG_COLUMNS)

    numeric = {
        col: pd.to_numeric(frame[col], errors="coerce").to_numpy(dtype=float)
        for col in LOG_COLUMNS
    }
    bad = np.zeros(len(frame), dtype=bool)
    for col, values in numeric.items():
        bad |= ~np.isfinite(values)
        if col != "rating":
            bad |= np.isfinite(values) & (np.mod(values, 1.0) != 0.0)
    _bad_line(path, frame, bad)

    order = np.argsort(numeric["timestamp"], kind="stable")
    users, user_ids = pd.factorize(
        numeric["user"].astype(np.int64)[order], sort=True
    )
    items, item_ids = pd.factorize(
        numeric["item"].astype(np.int64)[order], sort=True
    )
    log = InteractionLog(
        users=users.astype(np.int64),
        items=items.astype(np.int64),
        ratings=numeric["rating"][order],
        timestamps=numeric["timestamp"].astype(np.int64)[order],
        user_ids=np.asarray(user_ids, dtype=np.int64),
        item_ids=np.asarray(item_ids, dtype=np.int64),
    )
    logger.info(
        f"Loaded {len(log)} events from {path}: {log.n_users} users, "
        f"{log.n_items} items"
    )
    return log


def binarize_payoffs(log: InteractionLog) -> InteractionLog:
    """Map every nonzero rating to payoff 1 and zero to 0."""
    return replace(
        log, ratings=(log.ratings != 0).astype(float), binary=True
    )


def activity_profile(log: InteractionLog) -> ActivityProfile:
    """Event counts per user and the share of the top 10% of users."""
    counts = np.sort(np.bincount(log.users, minlength=log.n_users))[::-1]
    total = counts.sum()
    if total == 0:
        return ActivityProfile(counts=counts, top_decile_share=0.0)
    top = max(1, math.ceil(log.n_users / 10))
    return ActivityProfile(
        counts=counts, top_decile_share=float(counts[:top].sum() / total)
    )


def load_item_features(
    path: Union[str, Path], log: InteractionLog
) -> np.ndarray:
    """
    Raw features from a pipe-separated u.item file: the 19 genre flags
    and the release year, one row per dense item id of ``log``.

    Missing years take the median year; items without a row take the
    column means.

    Raises:
        IngestError: if the file cannot be parsed
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path,
            sep="|",
            header=None,
            dtype=str,
            encoding="latin-1",
            keep_default_na=False,
        )
    except (OSError, pd.errors.ParserError) as e:
        raise IngestError(f"Cannot parse item file {path}: {e}") from e
    if frame.shape[1] < ITEM_COLUMNS:
        raise IngestError(
            f"{path}: expected at least {ITEM_COLUMNS} fields, "
            f"got {frame.shape[1]}"
        )

    raw_ids = pd.to_numeric(frame[0], errors="coerce")
    genres = frame.iloc[:, 5:ITEM_COLUMNS].apply(
        pd.to_numeric, errors="coerce"
    )
    bad = raw_ids.isna().to_numpy() | genres.isna().any(axis=1).to_numpy()
    _bad_line(path, frame, bad)

    years = pd.to_numeric(frame[2].str[-4:], errors="coerce")
    if years.notna().any():
        years = years.fillna(years.median())
    else:
        years = years.fillna(0.0)

    table = pd.DataFrame(
        np.column_stack([genres.to_numpy(dtype=float), years.to_numpy()]),
        index=raw_ids.astype(np.int64).to_numpy(),
    )
    table = table[~table.index.duplicated(keep="first")]
    aligned = table.reindex(log.item_ids)
    missing = int(aligned.isna().any(axis=1).sum())
    if missing:
        logger.warning(
            f"{missing} logged items have no row in {path}; "
            f"using column means"
        )
        aligned = aligned.fillna(table.mean())
    return aligned.to_numpy(dtype=float)


def load_feature_matrix(
    path: Union[str, Path], log: InteractionLog
) -> np.ndarray:
    """
    Precomputed raw features from a CSV whose first column is the raw
    item id and whose remaining columns are numeric.

    Raises:
        IngestError: on unreadable files, non-numeric values or logged
            items without a row
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestError(f"Cannot parse feature file {path}: {e}") from e
    if frame.shape[1] < 2:
        raise IngestError(f"{path}: need an id column and features")

    ids = pd.to_numeric(frame.iloc[:, 0], errors="coerce")
    values = frame.iloc[:, 1:].apply(pd.to_numeric, errors="coerce")
    bad = ids.isna().to_numpy() | values.isna().any(axis=1).to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        # header is line 1
        raise IngestError(f"{path}: malformed line {row + 2}")

    values.index = ids.astype(np.int64).to_numpy()
    aligned = values[~values.index.duplicated(keep="first")].reindex(
        log.item_ids
    )
    if aligned.isna().any(axis=1).any():
        absent = log.item_ids[aligned.isna().any(axis=1).to_numpy()]
        raise IngestError(
            f"{path}: no features for {len(absent)} logged items, "
            f"e.g. {int(absent[0])}"
        )
    return aligned.to_numpy(dtype=float)
