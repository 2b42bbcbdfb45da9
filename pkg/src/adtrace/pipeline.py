"""Stage drivers: each reads the previous stage's files and writes its own.

Every stage keeps a ledger of canonical URLs it has already handled under the
work directory, so re-running a stage only processes new inputs.
"""

from __future__ import annotations

import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import httpx

from . import urls
from .config import PipelineConfig
from .crawler import run_crawl
from .extraction import (
    extract_embedded_metadata,
    extract_title_text,
    merge_product_fields,
    parse_html,
)
from .extraction.html import charset_from_content_type
from .induction import SelectorRuleSet, apply_rules, induce_rules, load_examples
from .objectstore import ObjectStore, StoreSettings
from .pagestore import PageStore, read_pages
from .records import IdFactory, assemble_record, batch_files, read_batch, read_records, write_batch
from .relevance import annotate, filter_records, make_backend
from .report import build_report
from .seeds import expand_keywords, generate_seeds, load_patterns, load_species, write_seeds

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    def __init__(self, message: str, summary: dict | None = None):
        self.summary = summary or {}
        super().__init__(message)


class Ledger:
    """Append-only set of processed canonical URLs."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.done: set[str] = set()
        if self.path.exists():
            self.done = {l.strip() for l in self.path.read_text(encoding="utf-8").splitlines()
                         if l.strip()}

    def __contains__(self, key: str) -> bool:
        return key in self.done

    def add_all(self, keys) -> None:
        keys = [k for k in keys if k not in self.done]
        if not keys:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            for key in keys:
                fh.write(key + "\n")
        self.done.update(keys)


def _require(path: Path | None, what: str) -> Path:
    if path is None or not Path(path).exists():
        raise StageError(f"{what} not found: {path}")
    return Path(path)


def _next_part(directory: Path, prefix: str = "part-") -> int:
    numbers = [int(m.group(1)) for p in directory.glob(f"{prefix}*.parquet")
               if (m := re.match(rf"{prefix}(\d+)\.parquet$", p.name))]
    return max(numbers, default=-1) + 1


def _id_factory(cfg: PipelineConfig, salt: int) -> IdFactory:
    return IdFactory(cfg.test_mode.seed * 1000 + salt) if cfg.test_mode.enabled else IdFactory()


# -- gen-seeds -------------------------------------------------------------

def gen_seeds(cfg: PipelineConfig) -> dict:
    patterns = load_patterns(_require(cfg.paths.patterns, "patterns file"))
    species = load_species(_require(cfg.paths.species, "species file"))
    keywords = expand_keywords(species)
    seeds = generate_seeds(patterns, keywords)
    if not keywords:
        log.warning("species file produced no keywords; no seeds generated")
    write_seeds(seeds, cfg.paths.seeds)
    return {"patterns": len(patterns), "keywords": len(keywords), "seeds": len(seeds),
            "skipped_keywords": len(seeds.skipped), "output": str(cfg.paths.seeds)}


# -- crawl -----------------------------------------------------------------

def crawl(cfg: PipelineConfig, client: httpx.Client | None = None) -> dict:
    from .seeds import read_seed_urls

    seeds = read_seed_urls(_require(cfg.paths.seeds, "seed file"))
    if not seeds:
        return {"fetched": 0, "errored": 0, "admitted": 0, "rejected_out_of_scope": 0,
                "deduped": 0, "robots_disallowed": 0, "mean_elapsed_ms": 0.0}
    wall_clock = None
    if cfg.test_mode.enabled:
        fixed = cfg.test_mode.clock
        wall_clock = lambda: fixed  # noqa: E731
    with PageStore(cfg.paths.page_store) as store:
        stats = run_crawl(seeds, cfg.crawl, store, client=client, wall_clock=wall_clock)
    return stats.as_dict()


# -- induce ----------------------------------------------------------------

def induce(cfg: PipelineConfig, domain: str, examples_dir, out: Path | None = None) -> dict:
    examples = load_examples(_require(Path(examples_dir), "examples directory"))
    if not examples:
        raise StageError(f"no page.html/expected.json pairs under {examples_dir}")
    ruleset = induce_rules(examples, domain=domain)
    registrable = ruleset.domain
    out = out or Path(cfg.paths.rules) / f"{registrable}.json"
    ruleset.save(out)
    return {"domain": registrable, "examples": len(examples), "rules": sorted(ruleset.rules),
            "omitted": ruleset.diagnostics, "output": str(out)}


# -- extract ---------------------------------------------------------------

@dataclass
class ExtractCounters:
    pages_read: int = 0
    pages_parsed: int = 0
    records: int = 0
    already_processed: int = 0
    skipped_not_ok: int = 0
    skipped_not_html: int = 0
    metadata_blocks_skipped: int = 0
    price_conflicts: int = 0
    rule_misses: int = 0
    failed: int = 0
    failures: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["failures"] = d["failures"][:10]
        return d


class RuleBook:
    def __init__(self, directory: Path | None):
        self.directory = Path(directory) if directory else None
        self._cache: dict[str, SelectorRuleSet | None] = {}

    def for_domain(self, domain: str) -> SelectorRuleSet | None:
        if domain not in self._cache:
            path = self.directory / f"{domain}.json" if self.directory else None
            self._cache[domain] = SelectorRuleSet.load(path) if path and path.exists() else None
        return self._cache[domain]


def extract_page(page, rulebook: RuleBook | None = None, counters: ExtractCounters | None = None):
    """Page-store record -> ProductFields (three strategies merged)."""
    counters = counters or ExtractCounters()
    url = page.final_url or page.url
    parsed = parse_html(page.body, charset_from_content_type(page.content_type), url)
    counters.pages_parsed += 1
    title, text = extract_title_text(parsed)
    meta = extract_embedded_metadata(parsed)
    counters.metadata_blocks_skipped += meta.jsonld_skipped
    scraped: dict = {}
    rules = rulebook.for_domain(urls.domain_of(url)) if rulebook else None
    if rules is not None:
        diagnostics: list[str] = []
        scraped = apply_rules(rules, parsed, diagnostics)
        counters.rule_misses += len(diagnostics)
    fields = merge_product_fields(meta, scraped, (title, text))
    if "price_conflict" in fields.diagnostics:
        counters.price_conflicts += 1
    return fields


def extract(cfg: PipelineConfig) -> dict:
    store_path = _require(cfg.paths.page_store, "page store")
    ledger = Ledger(cfg.ledger("extract"))
    rulebook = RuleBook(cfg.paths.rules)
    counters = ExtractCounters()
    latest: dict[str, object] = {}
    for page in read_pages(store_path):
        counters.pages_read += 1
        if not page.ok:
            counters.skipped_not_ok += 1
            continue
        if "html" not in (page.content_type or "").lower():
            counters.skipped_not_html += 1
            continue
        try:
            key = urls.canonical(page.final_url or page.url)
        except urls.URLError:
            counters.failed += 1
            continue
        if key in ledger:
            counters.already_processed += 1
            continue
        latest.setdefault(key, page)

    new_id = _id_factory(cfg, 1)
    records, keys = [], []
    for key in sorted(latest):
        page = latest[key]
        try:
            fields = extract_page(page, rulebook, counters)
            records.append(assemble_record(page, fields, None, new_id=new_id))
            keys.append(key)
        except Exception as exc:  # one bad page must not sink the batch
            counters.failed += 1
            counters.failures.append(f"{page.url}: {exc}")
            log.exception("extract failed for %s", page.url)
    out_dir = cfg.stage_dir("extracted")
    if records:
        key = f"part-{_next_part(out_dir):04d}.parquet"
        write_batch(records, out_dir, key, staging=True)
    ledger.add_all(keys)
    counters.records = len(records)
    summary = counters.as_dict()
    if counters.failed:
        raise StageError(f"{counters.failed} pages failed extraction", summary)
    return summary


# -- classify --------------------------------------------------------------

def classify(cfg: PipelineConfig, input_path=None, client: httpx.Client | None = None,
             sleep: Callable[[float], None] | None = None) -> dict:
    settings = cfg.classifier
    source = Path(input_path) if input_path else cfg.stage_dir("extracted")
    files = batch_files(_require(source, "classifier input"))
    ledger = Ledger(cfg.ledger("classify"))
    pending, keys, skipped = [], [], 0
    for path in files:
        for record in read_batch(path):
            key = urls.canonical(record.url)
            if key in ledger or key in keys:
                skipped += 1
                continue
            pending.append(record)
            keys.append(key)
    backend = make_backend(settings.backend, client=client)
    kwargs = {"sleep": sleep} if sleep is not None else {}
    annotated = annotate(pending, backend, settings.attribute, settings.labels,
                         settings.hypothesis_template, settings.concurrency, **kwargs)
    out_dir = cfg.stage_dir("classified")
    if annotated:
        write_batch(annotated, out_dir, f"part-{_next_part(out_dir):04d}.parquet", staging=True)
    ledger.add_all(keys)
    passed = sum(1 for _ in filter_records(annotated, settings.relevant_labels, settings.min_prob))
    unclassified = sum(1 for r in annotated if r.zero_shot_label == "__unclassified__")
    summary = {"input": len(pending) + skipped, "classified": len(annotated) - unclassified,
               "unclassified": unclassified, "already_processed": skipped, "passed": passed,
               "backend": getattr(backend, "name", settings.backend)}
    return summary


# -- sink ------------------------------------------------------------------

def _store(cfg: PipelineConfig) -> ObjectStore | None:
    if not cfg.store.upload or not cfg.store.endpoint or not cfg.store.bucket:
        return None
    return ObjectStore(StoreSettings(cfg.store.endpoint, cfg.store.access_key or "",
                                     cfg.store.secret_key or ""))


def partition_key(template: str, date: str, part: int) -> str:
    return template.format(date=date, part=part)


def sink(cfg: PipelineConfig, store: ObjectStore | None = None, upload: bool = True) -> dict:
    source = _require(cfg.stage_dir("classified"), "classified records")
    ledger = Ledger(cfg.ledger("sink"))
    pending: dict[str, object] = {}
    skipped = 0
    for record in read_records(source):
        key = urls.canonical(record.url)
        if key in ledger or key in pending:
            skipped += 1
            continue
        pending[key] = record
    by_date: dict[str, list] = defaultdict(list)
    for key in sorted(pending):
        record = pending[key]
        by_date[record.retrieved.astimezone(timezone.utc).strftime("%Y-%m-%d")].append(record)

    store = store if store is not None else (_store(cfg) if upload else None)
    root = Path(cfg.paths.output)
    manifests, uploaded = [], 0
    now = (lambda: cfg.test_mode.clock) if cfg.test_mode.enabled else \
        (lambda: datetime.now(timezone.utc))
    for date in sorted(by_date):
        records = by_date[date]
        part = 0
        while (root / partition_key(cfg.store.partition_template, date, part)).exists():
            part += 1
        key = partition_key(cfg.store.partition_template, date, part)
        manifest = write_batch(records, root, key, now=now)
        manifests.append(manifest)
        if store is not None:
            store.put_object(cfg.store.bucket, key, (root / key).read_bytes())
            uploaded += 1
        ledger.add_all(urls.canonical(r.url) for r in records)
    return {"records": sum(m.record_count for m in manifests), "batches": len(manifests),
            "uploaded": uploaded, "already_processed": skipped,
            "objects": [m.object_key for m in manifests]}


# -- report ----------------------------------------------------------------

def report(source, labels, top_k: int = 20, candidate_labels=None):
    from .relevance import DEFAULT_LABELS

    return build_report(read_records(source), labels, top_k, candidate_labels or DEFAULT_LABELS)
