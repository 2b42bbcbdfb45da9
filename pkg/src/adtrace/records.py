"""The 18-attribute ad record and its Parquet batches."""

from __future__ import annotations

import os
import random
import tempfile
import uuid
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Callable, Iterable

import pyarrow as pa
import pyarrow.parquet as pq

from . import urls
from .extraction.merge import ProductFields
from .pagestore import FetchedPage
from .relevance import ClassificationResult

SCHEMA_VERSION = 1
SCHEMA_VERSION_KEY = b"adtrace.schema_version"
PRICE_TYPE = pa.decimal128(18, 4)
PRICE_QUANTUM = Decimal("0.0001")
PRICE_MAX = Decimal("99999999999999.9999")
MANDATORY = ("url", "text", "product", "domain", "retrieved", "zero_shot_label",
             "zero_shot_prob", "id")


@dataclass
class AdRecord:
    url: str
    title: str | None
    text: str
    product: str
    description: str | None
    domain: str
    image: str | None
    retrieved: datetime
    category: str | None
    production_date: str | None
    price: Decimal | None
    currency: str | None
    seller: str | None
    seller_type: str | None
    location: str | None
    zero_shot_label: str | None
    zero_shot_prob: float | None
    id: str

    def validate(self) -> "AdRecord":
        for name in MANDATORY:
            if getattr(self, name) is None:
                raise ValueError(f"{name} is required")
        uuid.UUID(self.id)
        if self.domain != urls.domain_of(self.url):
            raise ValueError(f"domain {self.domain!r} does not match url {self.url!r}")
        if self.price is not None and (not self.price.is_finite() or self.price < 0):
            raise ValueError("price must be a finite non-negative decimal")
        return self


COLUMNS = tuple(f.name for f in fields(AdRecord))

_TYPES = {
    "retrieved": pa.timestamp("ms", tz="UTC"),
    "price": PRICE_TYPE,
    "zero_shot_prob": pa.float64(),
}


def arrow_schema(staging: bool = False) -> pa.Schema:
    """Final schema; ``staging`` relaxes the classifier columns for pre-classification files."""
    required = set(MANDATORY)
    if staging:
        required -= {"zero_shot_label", "zero_shot_prob"}
    return pa.schema(
        [pa.field(name, _TYPES.get(name, pa.string()), nullable=name not in required)
         for name in COLUMNS],
        metadata={SCHEMA_VERSION_KEY: str(SCHEMA_VERSION).encode()},
    )


@dataclass
class BatchManifest:
    object_key: str
    record_count: int
    byte_size: int
    written_at: datetime
    schema_version: int = SCHEMA_VERSION

    def as_dict(self) -> dict:
        return {
            "object_key": self.object_key,
            "record_count": self.record_count,
            "byte_size": self.byte_size,
            "written_at": self.written_at.isoformat(),
            "schema_version": self.schema_version,
        }


class IdFactory:
    """Random UUID4s; seeded for reproducible test-mode runs."""

    def __init__(self, seed: int | None = None):
        self._rng = random.Random(seed) if seed is not None else None

    def __call__(self) -> str:
        if self._rng is None:
            return str(uuid.uuid4())
        return str(uuid.UUID(int=self._rng.getrandbits(128), version=4))


def _price(value: Decimal | None) -> Decimal | None:
    if value is None:
        return None
    try:
        value = value.quantize(PRICE_QUANTUM)
    except InvalidOperation:
        return None
    return value if value <= PRICE_MAX else None


def truncate_ms(ts: datetime) -> datetime:
    ts = ts.astimezone(timezone.utc)
    return ts.replace(microsecond=ts.microsecond // 1000 * 1000)


def assemble_record(
    page: FetchedPage,
    product: ProductFields,
    cls: ClassificationResult | None,
    new_id: Callable[[], str] = IdFactory(),
) -> AdRecord:
    """Build a record; ``cls=None`` leaves the classifier columns empty for staging."""
    url = page.final_url or page.url
    return AdRecord(
        url=url,
        title=product.title,
        text=product.text or "",
        product=product.product or product.title or "",
        description=product.description,
        domain=urls.domain_of(url),
        image=product.image,
        retrieved=truncate_ms(page.retrieved_at),
        category=product.category,
        production_date=product.production_date,
        price=_price(product.price),
        currency=product.currency,
        seller=product.seller,
        seller_type=product.seller_type,
        location=product.location,
        zero_shot_label=cls.top_label if cls is not None else None,
        zero_shot_prob=cls.top_prob if cls is not None else None,
        id=new_id(),
    )


def to_table(records: list[AdRecord], staging: bool = False) -> pa.Table:
    schema = arrow_schema(staging)
    columns = {name: [getattr(r, name) for r in records] for name in COLUMNS}
    columns["price"] = [_price(p) for p in columns["price"]]
    return pa.Table.from_pydict(columns, schema=schema)


def from_table(table: pa.Table) -> list[AdRecord]:
    rows = table.to_pylist()
    return [AdRecord(**{name: row.get(name) for name in COLUMNS}) for row in rows]


def write_batch(
    records: list[AdRecord],
    root,
    key: str,
    staging: bool = False,
    now: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
) -> BatchManifest | None:
    """Write ``records`` to ``root/key`` atomically; ``None`` for an empty batch."""
    if not records:
        return None
    if not staging:
        for record in records:
            record.validate()
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("record ids must be unique within a batch")
    table = to_table(records, staging)
    target = Path(root) / key
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    os.close(fd)
    try:
        pq.write_table(table, tmp, compression="snappy")
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return BatchManifest(key, len(records), target.stat().st_size, now())


def read_batch(path) -> list[AdRecord]:
    return from_table(pq.read_table(path))


def batch_files(root) -> list[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    if not root.exists():
        return []
    return sorted(p for p in root.rglob("*.parquet") if not p.name.startswith("."))


def read_records(source) -> Iterable[AdRecord]:
    for path in batch_files(source):
        yield from read_batch(path)
