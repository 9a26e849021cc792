"""Small shared helpers: timestamps, atomic file writes, JSON lines."""

from __future__ import annotations

import json
import os
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def format_ts(ts: datetime) -> str:
    """RFC 3339 with a Z suffix; naive datetimes are taken as UTC."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_ts(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


class LogicalClock:
    """Deterministic clock for scenario runs: +1 s per reading."""

    def __init__(self, start: str = "2024-01-01T00:00:00Z") -> None:
        self._current = parse_ts(start)

    def __call__(self) -> datetime:
        now = self._current
        self._current = now + timedelta(seconds=1)
        return now


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write-temp-then-rename so readers never observe partial files."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def append_jsonl(path: Path, record: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    line = json.dumps(record, sort_keys=True, separators=(",", ":"))
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def read_jsonl(path: Path) -> Iterator[Dict[str, Any]]:
    if not path.exists():
        return
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def latest_by_key(path: Path, key: str) -> Dict[str, Dict[str, Any]]:
    """Collapse an append-only JSONL into latest-record-wins per key."""
    state: Dict[str, Dict[str, Any]] = {}
    for record in read_jsonl(path):
        state[record[key]] = record
    return state


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def jsonl_lines(records: List[Dict[str, Any]]) -> str:
    return "".join(canonical_json(r) + "\n" for r in records)
