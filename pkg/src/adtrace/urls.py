"""URL normalization, canonicalization and registrable-domain lookup."""

from __future__ import annotations

import hashlib
import ipaddress
from functools import lru_cache
from urllib.parse import parse_qsl, urlencode, urljoin, urlsplit, urlunsplit

import tldextract

# Bundled public-suffix snapshot only; never touch the network.
_EXTRACT = tldextract.TLDExtract(suffix_list_urls=(), cache_dir=None)

DEFAULT_PORTS = {"http": 80, "https": 443}


class URLError(ValueError):
    pass


@lru_cache(maxsize=65536)
def registrable_domain(host: str) -> str:
    """Return the public-suffix-aware site of ``host`` (``www.ebay.co.uk`` -> ``ebay.co.uk``).

    IP literals and single-label hosts are returned unchanged. Hosts whose TLD is
    unknown to the snapshot fall back to the implicit ``*`` rule (last two labels).
    """
    host = host.strip().strip(".").lower()
    if not host:
        raise URLError("empty host")
    try:
        ipaddress.ip_address(host.strip("[]"))
        return host
    except ValueError:
        pass
    labels = host.split(".")
    if len(labels) == 1:
        return host
    parts = _EXTRACT(host)
    if parts.suffix and parts.domain:
        return f"{parts.domain}.{parts.suffix}"
    if parts.suffix:
        # host is itself a public suffix
        return host
    return ".".join(labels[-2:])


def host_of(url: str) -> str:
    host = urlsplit(url).hostname
    if not host:
        raise URLError(f"no host in {url!r}")
    return host


def domain_of(url: str) -> str:
    return registrable_domain(host_of(url))


def normalize(url: str) -> str:
    """Lowercase scheme and host, strip default ports and the fragment."""
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    if scheme not in DEFAULT_PORTS:
        raise URLError(f"unsupported scheme in {url!r}")
    host = parts.hostname
    if not host:
        raise URLError(f"no host in {url!r}")
    try:
        port = parts.port
    except ValueError as exc:
        raise URLError(str(exc)) from None
    netloc = host.lower()
    if ":" in netloc:
        netloc = f"[{netloc}]"
    if port is not None and port != DEFAULT_PORTS[scheme]:
        netloc = f"{netloc}:{port}"
    if parts.username or parts.password:
        userinfo = parts.username or ""
        if parts.password:
            userinfo += ":" + parts.password
        netloc = f"{userinfo}@{netloc}"
    path = parts.path or "/"
    return urlunsplit((scheme, netloc, path, parts.query, ""))


def canonical(url: str) -> str:
    """Dedupe key: normalized URL with query keys sorted (stable for equal keys)."""
    parts = urlsplit(normalize(url))
    if parts.query:
        pairs = parse_qsl(parts.query, keep_blank_values=True)
        query = urlencode(sorted(pairs, key=lambda kv: kv[0]))
        parts = parts._replace(query=query)
    return urlunsplit(parts)


def digest(url: str) -> str:
    return hashlib.sha1(canonical(url).encode("utf-8")).hexdigest()


def resolve(base: str, href: str) -> str:
    return urljoin(base, href.strip())
