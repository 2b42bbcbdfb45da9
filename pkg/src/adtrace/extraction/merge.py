"""Combine metadata, induced-scraper and page-content values into one product."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

from .html import normalize_space
from .metadata import MetadataSet
from .prices import detect_currency, normalize_currency, parse_price

FIELDS = (
    "title", "text", "product", "description", "category", "production_date",
    "price", "currency", "seller", "seller_type", "location", "image",
)
# metadata key -> product field
METADATA_FIELDS = {
    "name": "product",
    "description": "description",
    "price": "price",
    "priceCurrency": "currency",
    "image": "image",
    "seller": "seller",
    "category": "category",
    "productionDate": "production_date",
}
_FIELD_TO_META = {v: k for k, v in METADATA_FIELDS.items()}
_PRODUCTION_DATE = re.compile(r"^\d{4}(-\d{2}(-\d{2}([T ][0-9:.]+(Z|[+-]\d{2}:?\d{2})?)?)?)?$")
PRICE_CONFLICT_TOLERANCE = Decimal("0.01")


@dataclass
class ProductFields:
    text: str = ""
    title: str | None = None
    product: str | None = None
    description: str | None = None
    category: str | None = None
    production_date: str | None = None
    price: Decimal | None = None
    currency: str | None = None
    seller: str | None = None
    seller_type: str | None = None
    location: str | None = None
    image: str | None = None
    provenance: dict[str, str] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in FIELDS}
        if out["price"] is not None:
            out["price"] = str(out["price"])
        out["provenance"] = dict(self.provenance)
        out["diagnostics"] = list(self.diagnostics)
        return out


def _valid_date(value: str) -> bool:
    return bool(_PRODUCTION_DATE.match(value))


def _scraped_text(scraped: dict, name: str) -> str | None:
    value = scraped.get(name)
    if value is None:
        return None
    value = normalize_space(str(value))
    return value or None


def merge_product_fields(
    meta: MetadataSet,
    scraped: dict | None,
    page_content: tuple[str | None, str],
) -> ProductFields:
    scraped = scraped or {}
    title, text = page_content
    out = ProductFields(text=text or "")
    out.provenance["text"] = "content"

    # plain string fields: metadata > scraper > content
    for name in ("title", "product", "description", "category", "production_date",
                 "seller", "seller_type", "location", "image"):
        candidates = []
        meta_key = _FIELD_TO_META.get(name)
        if meta_key is not None:
            value, syntax = meta.first(meta_key)
            if value is not None:
                candidates.append((value, f"metadata:{syntax}"))
        scraped_value = _scraped_text(scraped, name)
        if scraped_value is not None:
            candidates.append((scraped_value, "scraper"))
        if name in ("title", "product") and title:
            candidates.append((title, "content"))
        for value, source in candidates:
            if name == "production_date" and not _valid_date(value):
                out.diagnostics.append(f"invalid_production_date:{source}")
                continue
            setattr(out, name, value)
            out.provenance[name] = source
            break

    meta_price, price_syntax = meta.first("price")
    meta_currency, currency_syntax = meta.first("priceCurrency")
    scraped_currency_raw = _scraped_text(scraped, "currency")
    scraped_currency = None
    if scraped_currency_raw is not None:
        scraped_currency = normalize_currency(scraped_currency_raw) or \
            detect_currency(scraped_currency_raw)[0]

    hint = meta_currency or scraped_currency
    scraped_price = None
    raw_price = _scraped_text(scraped, "price")
    if raw_price is not None:
        scraped_price = parse_price(raw_price, hint)
        if scraped_price is None:
            out.diagnostics.append("unparseable_price:scraper")

    if meta_price is not None:
        out.price = meta_price
        out.provenance["price"] = f"metadata:{price_syntax}"
        if scraped_price is not None:
            diff = abs(scraped_price.amount - meta_price)
            if diff > PRICE_CONFLICT_TOLERANCE * abs(meta_price):
                out.diagnostics.append("price_conflict")
    elif scraped_price is not None:
        out.price = scraped_price.amount
        out.provenance["price"] = "scraper"

    if meta_currency is not None:
        out.currency = meta_currency
        out.provenance["currency"] = f"metadata:{currency_syntax}"
    elif scraped_currency is not None:
        out.currency = scraped_currency
        out.provenance["currency"] = "scraper"
    elif scraped_price is not None and scraped_price.currency is not None:
        out.currency = scraped_price.currency
        out.provenance["currency"] = "scraper:symbol"
        if scraped_price.ambiguous_symbol:
            out.diagnostics.append("ambiguous_currency_symbol")
    return out
