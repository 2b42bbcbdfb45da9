"""Append-only store of fetched pages.

Each record is a 4-byte big-endian length followed by that many bytes of UTF-8
JSON with the fields of :class:`FetchedPage`.
"""

from __future__ import annotations

import base64
import json
import os
import struct
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

_HEADER = struct.Struct(">I")


class PageStoreError(IOError):
    pass


@dataclass
class FetchedPage:
    url: str
    final_url: str
    status: int
    body: bytes
    content_type: str
    retrieved_at: datetime
    elapsed_ms: float
    truncated: bool = False
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and 200 <= self.status < 300

    def to_json(self) -> dict:
        return {
            "url": self.url,
            "final_url": self.final_url,
            "status": self.status,
            "retrieved_at": format_timestamp(self.retrieved_at),
            "elapsed_ms": self.elapsed_ms,
            "content_type": self.content_type,
            "body_b64": base64.b64encode(self.body).decode("ascii"),
            "truncated": self.truncated,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FetchedPage":
        return cls(
            url=doc["url"],
            final_url=doc["final_url"],
            status=int(doc["status"]),
            body=base64.b64decode(doc["body_b64"]),
            content_type=doc.get("content_type") or "",
            retrieved_at=parse_timestamp(doc["retrieved_at"]),
            elapsed_ms=float(doc["elapsed_ms"]),
            truncated=bool(doc.get("truncated", False)),
            error=doc.get("error"),
        )


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def parse_timestamp(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(timezone.utc)


def encode_record(page: FetchedPage) -> bytes:
    payload = json.dumps(page.to_json(), ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(len(payload)) + payload


class PageStore:
    """Thread-safe appender; every record is written with a single ``write``."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._fd: int | None = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _open(self) -> int:
        if self._fd is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        return self._fd

    def append(self, page: FetchedPage) -> None:
        data = encode_record(page)
        with self._lock:
            try:
                fd = self._open()
                written = os.write(fd, data)
            except OSError as exc:
                raise PageStoreError(f"cannot append to {self.path}: {exc}") from exc
            if written != len(data):
                raise PageStoreError(f"short write to {self.path}")

    def close(self) -> None:
        with self._lock:
            if self._fd is not None:
                os.close(self._fd)
                self._fd = None


def read_pages(path) -> Iterator[FetchedPage]:
    """Yield stored pages in append order; a trailing partial record is ignored."""
    path = Path(path)
    if not path.exists():
        return
    with open(path, "rb") as fh:
        while True:
            header = fh.read(_HEADER.size)
            if len(header) < _HEADER.size:
                return
            (length,) = _HEADER.unpack(header)
            payload = fh.read(length)
            if len(payload) < length:
                return
            yield FetchedPage.from_json(json.loads(payload.decode("utf-8")))
