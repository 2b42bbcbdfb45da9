"""Error-tolerant HTML parsing and visible-text extraction."""

from __future__ import annotations

import codecs
import re
from dataclasses import dataclass

from bs4 import BeautifulSoup, NavigableString, Tag
from bs4.element import Comment, Declaration, Doctype, ProcessingInstruction, CData

PARSER = "lxml"

INVISIBLE = frozenset({"script", "style", "template", "noscript", "head", "title", "meta", "link"})
BLOCK = frozenset({
    "address", "article", "aside", "blockquote", "body", "br", "dd", "details", "dialog",
    "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2",
    "h3", "h4", "h5", "h6", "header", "hgroup", "hr", "li", "main", "nav", "ol", "p",
    "pre", "section", "summary", "table", "tbody", "thead", "tfoot", "tr", "td", "th",
    "ul", "caption", "option", "select", "textarea", "html",
})
_NON_TEXT = (Comment, Declaration, Doctype, ProcessingInstruction, CData)
_LINEBREAKS = re.compile(r"[\r\n\f\v\u2028\u2029]+")

_META_CHARSET = re.compile(rb"""<meta[^>]+charset\s*=\s*["']?\s*([A-Za-z0-9_.:\-]+)""", re.I)


@dataclass
class ParsedPage:
    url: str
    tree: BeautifulSoup
    charset: str


def _codec(name: str | None) -> str | None:
    if not name:
        return None
    try:
        return codecs.lookup(name.strip().strip("\"'")).name
    except LookupError:
        return None


def charset_from_content_type(content_type: str | None) -> str | None:
    if not content_type:
        return None
    m = re.search(r"charset\s*=\s*[\"']?([^\s;\"']+)", content_type, re.I)
    return m.group(1) if m else None


def sniff_meta_charset(body: bytes) -> str | None:
    m = _META_CHARSET.search(body[:4096])
    return m.group(1).decode("ascii", "replace") if m else None


def decode_body(body: bytes, declared_charset: str | None = None) -> tuple[str, str]:
    """Resolve the charset (header, then meta, then UTF-8) and decode leniently."""
    charset = _codec(declared_charset) or _codec(sniff_meta_charset(body)) or "utf-8"
    if charset == "utf-8" and body.startswith(codecs.BOM_UTF8):
        body = body[len(codecs.BOM_UTF8):]
    return body.decode(charset, errors="replace"), charset


def parse_html(body: bytes, declared_charset: str | None = None, url: str = "") -> ParsedPage:
    try:
        text, charset = decode_body(body or b"", declared_charset)
        tree = BeautifulSoup(text, PARSER)
    except Exception:  # parser must be total
        tree, charset = BeautifulSoup("", PARSER), "utf-8"
    return ParsedPage(url=url, tree=tree, charset=charset)


def normalize_space(text: str) -> str:
    return " ".join(text.split())


def _walk_text(node: Tag, out: list[str]) -> None:
    for child in node.children:
        if isinstance(child, Tag):
            name = child.name.lower() if child.name else ""
            if name in INVISIBLE:
                continue
            block = name in BLOCK
            if block:
                out.append("\n")
            _walk_text(child, out)
            if block:
                out.append("\n")
        elif isinstance(child, NavigableString) and not isinstance(child, _NON_TEXT):
            # source line breaks are plain whitespace; only blocks break lines
            out.append(_LINEBREAKS.sub(" ", str(child)))


def visible_text(node: Tag) -> str:
    chunks: list[str] = []
    _walk_text(node, chunks)
    lines = (normalize_space(line) for line in "".join(chunks).split("\n"))
    return "\n".join(line for line in lines if line)


def extract_title_text(page: ParsedPage) -> tuple[str | None, str]:
    title_tag = page.tree.find("title")
    title = None
    if title_tag is not None:
        title = normalize_space(title_tag.get_text()) or None
    return title, visible_text(page.tree)
