"""Embedded product metadata: JSON-LD, microdata, OpenGraph and RDFa."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal

from bs4 import Tag

from .html import ParsedPage, normalize_space
from .prices import normalize_currency, parse_amount

KEYS = (
    "name", "description", "price", "priceCurrency", "image",
    "seller", "category", "productionDate", "availability",
)
SYNTAXES = ("json-ld", "microdata", "opengraph", "rdfa")

OPENGRAPH_KEYS = {
    "og:title": "name",
    "og:description": "description",
    "og:image": "image",
    "og:image:url": "image",
    "og:image:secure_url": "image",
    "og:price:amount": "price",
    "product:price:amount": "price",
    "og:price:currency": "priceCurrency",
    "product:price:currency": "priceCurrency",
    "product:category": "category",
    "og:availability": "availability",
    "product:availability": "availability",
    "product:retailer_title": "seller",
    "product:seller": "seller",
}


@dataclass
class MetadataEntry:
    syntax: str
    properties: dict
    raw: dict = field(default_factory=dict)


@dataclass
class MetadataSet:
    entries: list[MetadataEntry] = field(default_factory=list)
    jsonld_skipped: int = 0

    def __len__(self):
        return len(self.entries)

    def first(self, key: str):
        for entry in self.entries:
            if key in entry.properties:
                return entry.properties[key], entry.syntax
        return None, None


def _local(type_name: str) -> str:
    return type_name.rstrip("/").rsplit("/", 1)[-1].rsplit(":", 1)[-1].rsplit("#", 1)[-1]


def _types(value) -> set[str]:
    if isinstance(value, str):
        return {_local(t) for t in value.split()}
    if isinstance(value, list):
        return {_local(v) for v in value if isinstance(v, str)}
    return set()


class _Builder:
    """Accumulates first-seen values per key, normalizing as it goes."""

    def __init__(self):
        self.props: dict = {}
        self.raw: dict = {}

    def put(self, key: str, value) -> None:
        if key == "lowPrice":
            key = "price"
        if key not in KEYS or key in self.props or value is None:
            return
        if isinstance(value, bool):
            return
        if key == "price":
            if isinstance(value, Decimal):
                amount = value if value.is_finite() and value >= 0 else None
            elif isinstance(value, int):
                amount = Decimal(value) if value >= 0 else None
            elif isinstance(value, str):
                amount = parse_amount(value.strip())
            else:
                amount = None
            if amount is None:
                return
            self.props[key] = amount
            self.raw[key] = str(value).strip()
            return
        if not isinstance(value, str):
            return
        text = normalize_space(value)
        if not text:
            return
        if key == "priceCurrency":
            code = normalize_currency(text)
            if code is None:
                return
            self.props[key] = code
        else:
            self.props[key] = text
        self.raw[key] = value.strip()

    def entry(self, syntax: str) -> MetadataEntry | None:
        if not self.props:
            return None
        return MetadataEntry(syntax, self.props, self.raw)


# -- JSON-LD ---------------------------------------------------------------

def _jsonld_name(value):
    if isinstance(value, dict):
        return value.get("name")
    if isinstance(value, list):
        return _jsonld_name(value[0]) if value else None
    return value


def _jsonld_image(value):
    if isinstance(value, list):
        return _jsonld_image(value[0]) if value else None
    if isinstance(value, dict):
        return value.get("url") or value.get("contentUrl")
    return value


def _flatten_offer(offer: dict, builder: _Builder) -> None:
    price = offer.get("price", offer.get("lowPrice"))
    spec = offer.get("priceSpecification")
    if price is None and isinstance(spec, dict):
        price = spec.get("price")
        builder.put("priceCurrency", spec.get("priceCurrency"))
    builder.put("price", price)
    builder.put("priceCurrency", offer.get("priceCurrency"))
    builder.put("availability", offer.get("availability"))
    builder.put("seller", _jsonld_name(offer.get("seller")))


def _flatten_jsonld(obj: dict, types: set[str]) -> _Builder:
    b = _Builder()
    b.put("name", obj.get("name"))
    b.put("description", obj.get("description"))
    b.put("image", _jsonld_image(obj.get("image")))
    b.put("category", _jsonld_name(obj.get("category")))
    b.put("productionDate", obj.get("productionDate"))
    b.put("seller", _jsonld_name(obj.get("seller")))
    if "Offer" in types:
        _flatten_offer(obj, b)
        item = obj.get("itemOffered")
        if isinstance(item, dict):
            b.put("name", item.get("name"))
            b.put("description", item.get("description"))
            b.put("image", _jsonld_image(item.get("image")))
    offers = obj.get("offers")
    if isinstance(offers, dict):
        offers = [offers]
    if isinstance(offers, list):
        for offer in offers:
            if isinstance(offer, dict):
                _flatten_offer(offer, b)
    return b


def _walk_jsonld(node, out: list[MetadataEntry]) -> None:
    if isinstance(node, list):
        for item in node:
            _walk_jsonld(item, out)
        return
    if not isinstance(node, dict):
        return
    types = _types(node.get("@type"))
    if types & {"Product", "Offer"}:
        entry = _flatten_jsonld(node, types).entry("json-ld")
        if entry is not None:
            out.append(entry)
        return
    for value in node.values():
        if isinstance(value, (dict, list)):
            _walk_jsonld(value, out)


def _extract_jsonld(page: ParsedPage, result: MetadataSet) -> None:
    for script in page.tree.find_all("script"):
        kind = (script.get("type") or "").split(";")[0].strip().lower()
        if kind != "application/ld+json":
            continue
        text = script.string if script.string is not None else script.get_text()
        try:
            data = json.loads(text, parse_float=Decimal)
        except (ValueError, TypeError, RecursionError):
            result.jsonld_skipped += 1
            continue
        _walk_jsonld(data, result.entries)


# -- microdata / RDFa ------------------------------------------------------

_URL_ATTR = {"a": "href", "area": "href", "link": "href", "img": "src", "audio": "src",
             "embed": "src", "iframe": "src", "source": "src", "track": "src",
             "video": "src", "object": "data"}


def _element_value(el: Tag, url_attrs: tuple[str, ...] = ()) -> str | None:
    name = el.name
    if el.has_attr("content"):
        return el["content"]
    for attr in url_attrs:
        if el.has_attr(attr):
            return el[attr]
    if name in _URL_ATTR:
        return el.get(_URL_ATTR[name])
    if name in ("data", "meter") and el.has_attr("value"):
        return el["value"]
    if name == "time" and el.has_attr("datetime"):
        return el["datetime"]
    return el.get_text(" ")


class _ItemSyntax:
    def __init__(self, prop_attr, scope_attr, type_attr, url_attrs=()):
        self.prop_attr = prop_attr
        self.scope_attr = scope_attr
        self.type_attr = type_attr
        self.url_attrs = url_attrs

    def is_scope(self, el: Tag) -> bool:
        return el.has_attr(self.scope_attr)

    def props(self, el: Tag) -> list[str]:
        value = el.get(self.prop_attr)
        if isinstance(value, list):
            value = " ".join(value)
        return [_local(p) for p in (value or "").split()]

    def collect(self, scope: Tag, builder: _Builder) -> None:
        for child in scope.find_all(True, recursive=False):
            self._visit(child, builder)

    def _visit(self, el: Tag, builder: _Builder) -> None:
        props = self.props(el)
        if self.is_scope(el):
            for prop in props:
                if prop == "offers":
                    self.collect(el, _OfferView(builder))
                elif prop == "seller":
                    name = _Builder()
                    self.collect(el, name)
                    builder.put("seller", name.raw.get("name"))
            return
        for prop in props:
            builder.put(prop, _element_value(el, self.url_attrs))
        self.collect(el, builder)


class _OfferView:
    """Only lets offer-level keys through to the owning product."""

    ALLOWED = {"price", "lowPrice", "priceCurrency", "availability", "seller"}

    def __init__(self, target: _Builder):
        self.target = target
        self.props = target.props
        self.raw = target.raw

    def put(self, key, value):
        if key in self.ALLOWED:
            self.target.put(key, value)


MICRODATA = _ItemSyntax("itemprop", "itemscope", "itemtype")
RDFA = _ItemSyntax("property", "typeof", "typeof", url_attrs=("resource",))


def _extract_microdata(page: ParsedPage, result: MetadataSet) -> None:
    for el in page.tree.find_all(attrs={"itemscope": True}):
        if "Product" not in _types(el.get("itemtype") or ""):
            continue
        builder = _Builder()
        MICRODATA.collect(el, builder)
        entry = builder.entry("microdata")
        if entry is not None:
            result.entries.append(entry)


def _extract_rdfa(page: ParsedPage, result: MetadataSet) -> None:
    for el in page.tree.find_all(attrs={"typeof": True}):
        if "Product" not in _types(el.get("typeof") or ""):
            continue
        builder = _Builder()
        RDFA.collect(el, builder)
        entry = builder.entry("rdfa")
        if entry is not None:
            result.entries.append(entry)


def _extract_opengraph(page: ParsedPage, result: MetadataSet) -> None:
    builder = _Builder()
    for meta in page.tree.find_all("meta"):
        prop = (meta.get("property") or meta.get("name") or "").strip().lower()
        if not (prop.startswith("og:") or prop.startswith("product:")):
            continue
        key = OPENGRAPH_KEYS.get(prop)
        if key is not None:
            builder.put(key, meta.get("content"))
    entry = builder.entry("opengraph")
    if entry is not None:
        result.entries.append(entry)


def extract_embedded_metadata(page: ParsedPage) -> MetadataSet:
    result = MetadataSet()
    _extract_jsonld(page, result)
    _extract_microdata(page, result)
    _extract_opengraph(page, result)
    _extract_rdfa(page, result)
    return result
