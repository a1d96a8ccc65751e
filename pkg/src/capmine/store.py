"""Dataset persistence and the mining-result cache.

Both live in one sqlite file. Results are keyed by
``<dataset content hash>:<params digest>``, so a renamed but otherwise
identical dataset still hits the cache, while re-uploading different
content under an old name can never serve stale patterns. Bodies are
stored as the exact canonical JSON bytes that the miner serializes;
``get_cached`` hands them back untouched, which is what makes the
byte-identity guarantee on cache hits cheap to keep.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
from pathlib import Path

from . import errors
from .ingest import Dataset, dataset_from_json, dataset_to_json
from .miner import MiningResult

_SCHEMA = """
CREATE TABLE IF NOT EXISTS datasets (
    name TEXT PRIMARY KEY,
    content_hash TEXT NOT NULL,
    created_at REAL NOT NULL,
    sensor_count INTEGER NOT NULL,
    body BLOB NOT NULL
);
CREATE INDEX IF NOT EXISTS datasets_by_hash ON datasets (content_hash);
CREATE TABLE IF NOT EXISTS results (
    cache_key TEXT PRIMARY KEY,
    dataset_hash TEXT NOT NULL,
    params_digest TEXT NOT NULL,
    created_at REAL NOT NULL,
    last_used REAL NOT NULL,
    body BLOB NOT NULL
);
"""


def _translate(exc: sqlite3.Error) -> errors.CapmineError:
    if "full" in str(exc).lower():
        return errors.StorageFull(str(exc))
    return errors.IoFailure(str(exc))


class Store:
    """Thread-safe wrapper over one sqlite database file."""

    def __init__(self, path: str | Path = ":memory:", *, max_results: int | None = None):
        self.path = str(path)
        self.max_results = max_results
        self._lock = threading.RLock()
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
            self._conn.executescript(_SCHEMA)
            self._conn.commit()
        except sqlite3.Error as exc:
            raise _translate(exc) from exc

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- datasets ----------------------------------------------------------

    def put_dataset(self, name: str, dataset: Dataset) -> str:
        body = dataset_to_json(dataset)
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT OR REPLACE INTO datasets "
                    "(name, content_hash, created_at, sensor_count, body) "
                    "VALUES (?, ?, ?, ?, ?)",
                    (name, dataset.content_hash, time.time(), dataset.sensor_count, body),
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise _translate(exc) from exc
        return dataset.content_hash

    def get_dataset(self, name: str) -> Dataset:
        with self._lock:
            row = self._conn.execute(
                "SELECT body FROM datasets WHERE name = ?", (name,)
            ).fetchone()
        if row is None:
            raise errors.NotFound(f"no dataset named {name!r}")
        return dataset_from_json(row[0])

    def get_dataset_hash(self, name: str) -> str:
        """Hash lookup without deserializing the blob; keeps cache hits cheap."""
        with self._lock:
            row = self._conn.execute(
                "SELECT content_hash FROM datasets WHERE name = ?", (name,)
            ).fetchone()
        if row is None:
            raise errors.NotFound(f"no dataset named {name!r}")
        return row[0]

    def get_dataset_by_hash(self, content_hash: str) -> Dataset:
        with self._lock:
            row = self._conn.execute(
                "SELECT body FROM datasets WHERE content_hash = ? ORDER BY name LIMIT 1",
                (content_hash,),
            ).fetchone()
        if row is None:
            raise errors.NotFound(f"no dataset with hash {content_hash}")
        return dataset_from_json(row[0])

    def list_datasets(self) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT name, content_hash, created_at, sensor_count "
                "FROM datasets ORDER BY name"
            ).fetchall()
        return [
            {
                "name": name,
                "content_hash": content_hash,
                "created_at": created_at,
                "sensor_count": sensor_count,
            }
            for name, content_hash, created_at, sensor_count in rows
        ]

    # -- result cache ------------------------------------------------------

    def get_cached(self, key: str) -> bytes | None:
        with self._lock:
            try:
                row = self._conn.execute(
                    "SELECT body FROM results WHERE cache_key = ?", (key,)
                ).fetchone()
                if row is None:
                    return None
                self._conn.execute(
                    "UPDATE results SET last_used = ? WHERE cache_key = ?",
                    (time.time(), key),
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise _translate(exc) from exc
        return row[0]

    def put_cached(self, key: str, result: MiningResult) -> None:
        expected = result.cache_key()
        if key != expected:
            raise errors.KeyMismatch(f"key {key} does not match result key {expected}")
        body = result.to_json_bytes()
        now = time.time()
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT OR REPLACE INTO results "
                    "(cache_key, dataset_hash, params_digest, created_at, last_used, body) "
                    "VALUES (?, ?, ?, ?, ?, ?)",
                    (key, result.dataset_hash, result.params.digest(), now, now, body),
                )
                if self.max_results is not None:
                    self._conn.execute(
                        "DELETE FROM results WHERE cache_key IN ("
                        "  SELECT cache_key FROM results ORDER BY last_used DESC"
                        "  LIMIT -1 OFFSET ?)",
                        (self.max_results,),
                    )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise _translate(exc) from exc

    # -- backup ------------------------------------------------------------

    def export_dir(self, directory: str | Path) -> None:
        target = Path(directory)
        try:
            target.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise errors.IoFailure(f"cannot create export dir {target}: {exc}") from exc
        with self._lock:
            datasets = self._conn.execute(
                "SELECT name, content_hash, created_at, sensor_count, body "
                "FROM datasets ORDER BY name"
            ).fetchall()
            results = self._conn.execute(
                "SELECT cache_key, dataset_hash, params_digest, created_at, last_used, body "
                "FROM results ORDER BY cache_key"
            ).fetchall()
        dataset_docs = [
            {
                "name": name,
                "content_hash": content_hash,
                "created_at": created_at,
                "sensor_count": sensor_count,
                "body": json.loads(body),
            }
            for name, content_hash, created_at, sensor_count, body in datasets
        ]
        result_docs = [
            {
                "cache_key": cache_key,
                "dataset_hash": dataset_hash,
                "params_digest": params_digest,
                "created_at": created_at,
                "last_used": last_used,
                "body": json.loads(body),
            }
            for cache_key, dataset_hash, params_digest, created_at, last_used, body in results
        ]
        try:
            (target / "datasets.json").write_text(
                json.dumps(dataset_docs, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
            (target / "results.json").write_text(
                json.dumps(result_docs, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
        except OSError as exc:
            raise errors.IoFailure(f"cannot write export to {target}: {exc}") from exc

    def import_dir(self, directory: str | Path) -> None:
        source = Path(directory)
        try:
            dataset_docs = json.loads((source / "datasets.json").read_text(encoding="utf-8"))
            result_docs = json.loads((source / "results.json").read_text(encoding="utf-8"))
        except OSError as exc:
            raise errors.IoFailure(f"cannot read export from {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise errors.IoFailure(f"corrupt export in {source}: {exc}") from exc
        with self._lock:
            try:
                for doc in dataset_docs:
                    body = json.dumps(doc["body"], sort_keys=True, separators=(",", ":"))
                    self._conn.execute(
                        "INSERT OR REPLACE INTO datasets "
                        "(name, content_hash, created_at, sensor_count, body) "
                        "VALUES (?, ?, ?, ?, ?)",
                        (
                            doc["name"],
                            doc["content_hash"],
                            doc["created_at"],
                            doc["sensor_count"],
                            body,
                        ),
                    )
                for doc in result_docs:
                    body = json.dumps(
                        doc["body"], sort_keys=True, separators=(",", ":")
                    ).encode("utf-8")
                    self._conn.execute(
                        "INSERT OR REPLACE INTO results "
                        "(cache_key, dataset_hash, params_digest, created_at, last_used, body) "
                        "VALUES (?, ?, ?, ?, ?, ?)",
                        (
                            doc["cache_key"],
                            doc["dataset_hash"],
                            doc["params_digest"],
                            doc["created_at"],
                            doc["last_used"],
                            body,
                        ),
                    )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise _translate(exc) from exc
