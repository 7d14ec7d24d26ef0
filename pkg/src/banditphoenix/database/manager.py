"""
Replay cache for BanditPhoenix.
Stores constructed replay rounds and the item feature table in sqlite so
repeated runs skip ingestion.
"""

import logging
import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..data.features import ItemFeatureTable
from ..data.replay import ReplayRound
from ..errors import CacheError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"


def _int_blob(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<i8").tobytes()


def _float_blob(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


class ReplayCache:
    """
    A sqlite file holding one set of replay rounds and features, tagged
    with the fingerprint of the data they were built from.
    """

    def __init__(self, db_path: Union[str, Path]):
        self.db_path = Path(db_path)
        self.schema_path = Path(__file__).parent / "schemas"
        self.connection: Optional[sqlite3.Connection] = None

        logger.info(f"ReplayCache initialized for {self.db_path}")

    def _get_connection(self) -> sqlite3.Connection:
        """Get the open connection."""
        if self.connection is None:
            raise CacheError("Cache not opened. Call open() first.")
        return self.connection

    def open(self, recreate_if_exists: bool = False) -> sqlite3.Connection:
        """
        Open the cache file, creating it and its schema if needed.

        Args:
            recreate_if_exists: Delete an existing file first

        Returns:
            SQLite connection object
        """
        try:
            if self.db_path.exists() and recreate_if_exists:
                logger.info(f"Recreating cache: {self.db_path}")
                self.db_path.unlink()
            self.db_path.parent.mkdir(parents=True, exist_ok=True)

            self.connection = sqlite3.connect(self.db_path)
            self._configure_connection(self.connection)
            self._apply_schema()
            return self.connection

        except CacheError:
            raise
        except Exception as e:
            logger.error(f"Failed to open cache: {e}")
            raise CacheError(f"Cache initialization failed: {e}") from e

    def _configure_connection(self, conn: sqlite3.Connection):
        conn.execute("PRAGMA journal_mode = WAL")
        conn.execute("PRAGMA synchronous = NORMAL")
        conn.execute("PRAGMA cache_size = -10000")  # 10MB cache
        conn.execute("PRAGMA temp_store = MEMORY")

    def _apply_schema(self):
        """Apply the schema from its SQL file; a no-op if present."""
        schema_file = self.schema_path / f"initial.v{SCHEMA_VERSION}.sql"
        if not schema_file.exists():
            raise CacheError(f"Schema file not found: {schema_file}")

        conn = self._get_connection()
        try:
            conn.executescript(schema_file.read_text(encoding="utf-8"))
            conn.commit()
        except sqlite3.Error as e:
            conn.rollback()
            raise CacheError(f"Failed to apply schema: {e}") from e

    def metadata(self) -> Dict[str, str]:
        """All key/value pairs of the cache_metadata table."""
        try:
            rows = (
                self._get_connection()
                .execute("SELECT key, value FROM cache_metadata")
                .fetchall()
            )
        except sqlite3.Error as e:
            raise CacheError(f"Failed to read cache metadata: {e}") from e
        return dict(rows)

    def is_fresh(self, fingerprint: str) -> bool:
        """True if the cache was built by this schema from this data."""
        meta = self.metadata()
        return (
            meta.get("schema_version") == SCHEMA_VERSION
            and meta.get("fingerprint") == fingerprint
        )

    def store(
        self,
        rounds: Sequence[ReplayRound],
        features: ItemFeatureTable,
        fingerprint: str,
    ) -> None:
        """
        Replace the cache content in a single transaction.

        Args:
            rounds: Replay rounds to store
            features: Feature table the rounds refer to
            fingerprint: Hash of the source data and build parameters
        """
        conn = self._get_connection()
        try:
            with conn:
                for table in (
                    "replay_rounds",
                    "item_features",
                    "feature_components",
                    "cache_metadata",
                ):
                    conn.execute(f"DELETE FROM {table}")
                conn.executemany(
                    "INSERT INTO replay_rounds "
                    "(round, user_id, candidate_ids, payoffs) "
                    "VALUES (?, ?, ?, ?)",
                    (
                        (
                            r.round,
                            r.user,
                            _int_blob(r.candidate_ids),
                            _float_blob(r.payoffs),
                        )
                        for r in rounds
                    ),
                )
                conn.executemany(
                    "INSERT INTO item_features (item_id, vector) "
                    "VALUES (?, ?)",
                    (
                        (item, _float_blob(vector))
                        for item, vector in enumerate(features.vectors)
                    ),
                )
                conn.executemany(
                    "INSERT INTO feature_components "
                    "(component, explained_variance, vector) "
                    "VALUES (?, ?, ?)",
                    (
                        (k, float(ratio), _float_blob(vector))
                        for k, (ratio, vector) in enumerate(
                            zip(
                                features.explained_variance_ratio,
                                features.components,
                            )
                        )
                    ),
                )
                conn.executemany(
                    "INSERT INTO cache_metadata (key, value) VALUES (?, ?)",
                    [
                        ("schema_version", SCHEMA_VERSION),
                        ("fingerprint", fingerprint),
                        ("created_at", datetime.now().isoformat()),
                        ("round_count", str(len(rounds))),
                        ("dimension", str(features.dimension)),
                    ],
                )
        except sqlite3.Error as e:
            raise CacheError(f"Failed to store replay rounds: {e}") from e

        logger.info(
            f"Cached {len(rounds)} rounds and {len(features)} item vectors "
            f"in {self.db_path}"
        )

    def load(self) -> Tuple[List[ReplayRound], ItemFeatureTable]:
        """
        Read back what store() wrote.

        Raises:
            CacheError: if the cache is empty or unreadable
        """
        conn = self._get_connection()
        meta = self.metadata()
        if "dimension" not in meta:
            raise CacheError(f"Cache {self.db_path} is empty")
        dimension = int(meta["dimension"])
        try:
            rounds = [
                ReplayRound(
                    round=int(t),
                    user=int(user),
                    candidate_ids=np.frombuffer(ids, dtype="<i8").astype(
                        np.int64
                    ),
                    payoffs=np.frombuffer(payoffs, dtype="<f8").astype(
                        float
                    ),
                )
                for t, user, ids, payoffs in conn.execute(
                    "SELECT round, user_id, candidate_ids, payoffs "
                    "FROM replay_rounds ORDER BY round"
                )
            ]
            vectors = [
                np.frombuffer(blob, dtype="<f8")
                for (blob,) in conn.execute(
                    "SELECT vector FROM item_features ORDER BY item_id"
                )
            ]
            components = conn.execute(
                "SELECT explained_variance, vector FROM feature_components "
                "ORDER BY component"
            ).fetchall()
        except sqlite3.Error as e:
            raise CacheError(f"Failed to load replay rounds: {e}") from e

        features = ItemFeatureTable(
            vectors=np.array(vectors, dtype=float).reshape(-1, dimension),
            components=np.array(
                [np.frombuffer(blob, dtype="<f8") for _, blob in components],
                dtype=float,
            ),
            explained_variance_ratio=np.array(
                [ratio for ratio, _ in components], dtype=float
            ),
        )
        logger.info(f"Loaded {len(rounds)} cached rounds from {self.db_path}")
        return rounds, features

    def close(self):
        """Close the connection."""
        if self.connection:
            self.connection.close()
            self.connection = None
            logger.debug("Cache connection closed")

    def __enter__(self):
        if self.connection is None:
            self.open()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
