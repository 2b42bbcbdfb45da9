"""Seed URL generation: search-form templates crossed with species keywords."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import quote_plus, urlsplit

log = logging.getLogger(__name__)

PLACEHOLDER = "KEYWORD"


class SeedFileError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


@dataclass(frozen=True)
class SitePattern:
    domain: str
    template: str

    def __post_init__(self):
        count = self.template.count(PLACEHOLDER)
        if count != 1:
            raise ValueError(
                f"template must contain {PLACEHOLDER!r} exactly once, found {count}"
            )
        probe = urlsplit(self.template.replace(PLACEHOLDER, "x"))
        if probe.scheme not in ("http", "https") or not probe.hostname:
            raise ValueError(f"template is not an absolute HTTP(S) URL: {self.template!r}")

    def fill(self, encoded_keyword: str) -> str:
        return self.template.replace(PLACEHOLDER, encoded_keyword)


@dataclass(frozen=True)
class SpeciesEntry:
    scientific_name: str
    english_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.scientific_name.strip():
            raise ValueError("scientific_name is empty")
        object.__setattr__(self, "english_names", tuple(self.english_names))

    def keywords(self) -> list[str]:
        return expand_keywords([self])


@dataclass(frozen=True)
class SeedUrl:
    url: str
    domain: str
    keyword: str


@dataclass
class SeedSet:
    seeds: list[SeedUrl] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.seeds)

    def __iter__(self):
        return iter(self.seeds)

    @property
    def urls(self) -> list[str]:
        return [s.url for s in self.seeds]


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


def encode_keyword(keyword: str) -> str:
    """Form-encode a keyword: whitespace collapsed, space to ``+``, reserved chars escaped."""
    return quote_plus(collapse_whitespace(keyword), safe="")


def load_patterns(path) -> list[SitePattern]:
    patterns: list[SitePattern] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2 or not cols[0].strip() or not cols[1].strip():
                raise SeedFileError(path, lineno, "expected 'domain<TAB>template'")
            domain, template = cols[0].strip(), cols[1].strip()
            try:
                pattern = SitePattern(domain, template)
            except ValueError as exc:
                raise SeedFileError(path, lineno, str(exc)) from None
            key = (pattern.domain, pattern.template)
            if key in seen:
                raise SeedFileError(path, lineno, "duplicate (domain, template) pair")
            seen.add(key)
            patterns.append(pattern)
    return patterns


def load_species(path) -> list[SpeciesEntry]:
    """Read a species CSV with header ``scientific_name,english_names`` (names ``;``-separated)."""
    entries: list[SpeciesEntry] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return entries
        missing = {"scientific_name", "english_names"} - set(reader.fieldnames)
        if missing:
            raise SeedFileError(path, 1, f"missing columns: {', '.join(sorted(missing))}")
        for row in reader:
            lineno = reader.line_num
            names = [n.strip() for n in (row["english_names"] or "").split(";") if n.strip()]
            try:
                entries.append(SpeciesEntry((row["scientific_name"] or "").strip(), tuple(names)))
            except ValueError as exc:
                raise SeedFileError(path, lineno, str(exc)) from None
    return entries


def expand_keywords(species: list[SpeciesEntry]) -> list[str]:
    keywords: list[str] = []
    seen: set[str] = set()
    for entry in species:
        for name in (entry.scientific_name, *entry.english_names):
            name = collapse_whitespace(name)
            key = name.casefold()
            if name and key not in seen:
                seen.add(key)
                keywords.append(name)
    return keywords


def generate_seeds(patterns: list[SitePattern], keywords: list[str]) -> SeedSet:
    if keywords is None:
        raise TypeError("keywords must not be None")
    result = SeedSet()
    seen: set[str] = set()
    encoded = []
    for kw in keywords:
        enc = encode_keyword(kw)
        if not enc:
            log.warning("skipping keyword %r: encodes to empty string", kw)
            result.skipped.append(kw)
            continue
        encoded.append((kw, enc))
    for pattern in patterns:
        for kw, enc in encoded:
            url = pattern.fill(enc)
            if url in seen:
                continue
            seen.add(url)
            result.seeds.append(SeedUrl(url=url, domain=pattern.domain, keyword=kw))
    return result


def write_seeds(seeds: SeedSet, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for seed in seeds:
            fh.write(seed.url + "\n")


def read_seed_urls(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]
