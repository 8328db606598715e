"""Durable append-only object store backed by a JSON-lines log.

Every accepted object becomes one log line
``{"collection": ..., "date_added": ..., "seq": ..., "object": ...}``
flushed and fsynced before it is published to readers, so a crash never loses
an acknowledged write.  Startup replays the log; a torn final line (the only
corruption a crash mid-append can produce) is truncated away with a warning.

Writes to a collection are serialized by a lock.  Readers never take it: they
see an immutable prefix of the append-only record list, published atomically
after the fsync, so no reader can observe a partially applied envelope.
"""

import json
import logging
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Optional

from aiti.objects import AitiObject, object_from_dict, object_to_dict
from aiti.timestamps import format_timestamp, parse_timestamp, utc_now

logger = logging.getLogger("aiti.server.store")

_MS = timedelta(milliseconds=1)


class StoreCorruptError(RuntimeError):
    """The log is damaged somewhere other than its final line."""


@dataclass(frozen=True)
class StoredObject:
    collection_id: str
    date_added: datetime
    seq: int
    raw: dict  # the originally received document, spelling preserved
    obj: AitiObject  # normalized view

    @property
    def version(self) -> datetime:
        return self.obj.version

    def compat_type(self) -> str:
        return object_to_dict(self.obj, "paper-compat")["type"]


class ObjectStore:
    """Per-collection append-only records with an in-memory index."""

    def __init__(self, path, clock: Callable[[], datetime] = utc_now):
        self._path = Path(path)
        self._clock = clock
        self._lock = threading.Lock()
        self._records: dict = {}  # collection id -> list[StoredObject]
        self._visible: dict = {}  # collection id -> published prefix length
        self._seen: dict = {}  # collection id -> {(object id, version text)}
        self._next_seq: dict = {}
        self._last_added: dict = {}
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._replay()
        self._fh = self._path.open("a", encoding="utf-8", newline="")

    # -- recovery -----------------------------------------------------------

    def _replay(self) -> None:
        if not self._path.exists():
            return
        good_bytes = 0
        with self._path.open("rb") as fh:
            data = fh.read()
        offset = 0
        lines = data.split(b"\n")
        for i, line in enumerate(lines):
            is_last = i == len(lines) - 1
            if line == b"":
                offset += 1
                continue
            try:
                record = json.loads(line.decode("utf-8"))
                stored = self._record_from_log(record)
            except (ValueError, KeyError) as exc:
                if is_last:
                    logger.warning(
                        "discarding torn final log line (%d bytes): %s", len(line), exc
                    )
                    break
                raise StoreCorruptError(f"log line {i + 1} is corrupt: {exc}") from exc
            self._publish(stored)
            offset += len(line) + 1
            good_bytes = offset
        if good_bytes < len(data):
            with self._path.open("r+b") as fh:
                fh.truncate(good_bytes)

    def _record_from_log(self, record: dict) -> StoredObject:
        raw = record["object"]
        return StoredObject(
            collection_id=record["collection"],
            date_added=parse_timestamp(record["date_added"]),
            seq=int(record["seq"]),
            raw=raw,
            obj=object_from_dict(raw, "paper-compat"),
        )

    # -- writes -------------------------------------------------------------

    def _publish(self, stored: StoredObject) -> None:
        cid = stored.collection_id
        self._records.setdefault(cid, []).append(stored)
        self._visible[cid] = len(self._records[cid])
        self._seen.setdefault(cid, set()).add(
            (stored.obj.id, format_timestamp(stored.version))
        )
        self._next_seq[cid] = max(self._next_seq.get(cid, 1), stored.seq + 1)
        last = self._last_added.get(cid)
        if last is None or stored.date_added > last:
            self._last_added[cid] = stored.date_added

    def append(self, collection_id: str, entries) -> list:
        """Persist (raw, obj) pairs; returns one StoredObject or None per entry.

        None marks an (id, version) duplicate, which is idempotent: the store
        keeps the single existing copy.  All records of one call are fsynced
        before any becomes visible to readers.
        """
        with self._lock:
            seen = self._seen.setdefault(collection_id, set())
            stored_list: list = []
            results: list = []
            for raw, obj in entries:
                key = (obj.id, format_timestamp(obj.version))
                if key in seen:
                    results.append(None)
                    continue
                now = self._clock()
                last = self._last_added.get(collection_id)
                if last is not None and now <= last:
                    now = last + _MS  # keep date_added strictly increasing
                seq = self._next_seq.get(collection_id, 1)
                stored = StoredObject(
                    collection_id=collection_id, date_added=now, seq=seq, raw=raw, obj=obj
                )
                self._next_seq[collection_id] = seq + 1
                self._last_added[collection_id] = now
                seen.add(key)
                stored_list.append(stored)
                results.append(stored)
            for stored in stored_list:
                line = json.dumps(
                    {
                        "collection": stored.collection_id,
                        "date_added": format_timestamp(stored.date_added),
                        "seq": stored.seq,
                        "object": stored.raw,
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                self._fh.write(line + "\n")
            if stored_list:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                records = self._records.setdefault(collection_id, [])
                records.extend(stored_list)
                self._visible[collection_id] = len(records)
            return results

    # -- reads (wait-free against a published snapshot) ----------------------

    def snapshot(self, collection_id: str) -> list:
        records = self._records.get(collection_id)
        if not records:
            return []
        return records[: self._visible.get(collection_id, 0)]

    def query(
        self,
        collection_id: str,
        added_after: Optional[datetime] = None,
        match_type=None,
        match_id=None,
    ) -> list:
        """Latest version of each object id, filtered, in (date_added, seq) order."""
        latest: dict = {}
        for record in self.snapshot(collection_id):
            current = latest.get(record.obj.id)
            if current is None or record.version > current.version:
                latest[record.obj.id] = record
        records = sorted(latest.values(), key=lambda r: (r.date_added, r.seq))
        if added_after is not None:
            records = [r for r in records if r.date_added > added_after]
        if match_type:
            wanted = set(match_type)
            records = [r for r in records if r.obj.kind in wanted or r.compat_type() in wanted]
        if match_id:
            wanted = set(match_id)
            records = [r for r in records if r.obj.id in wanted]
        return records

    def close(self) -> None:
        self._fh.close()
