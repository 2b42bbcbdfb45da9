"""Example-based selector induction for per-site attribute scraping.

A rule is a chain of element steps (``div.price > span``): the last step selects
the value node, each earlier step must match that node's parent, grandparent and
so on. The first step may match at any depth. Induction starts from the nodes
that carry the expected value on the first training page, generalizes every
suffix of their root-to-node path by relaxing each step (child index, then id,
then classes), and keeps the candidates that select exactly the expected value
on every training page.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

from bs4 import BeautifulSoup, Tag

from . import urls
from .extraction.html import ParsedPage, normalize_space

log = logging.getLogger(__name__)

TEXT = "text-content"
IGNORED_ATTRS = frozenset({"class", "id", "style"})


class InductionError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    tag: str
    classes: tuple[str, ...] | None = None
    id: str | None = None
    index: int | None = None

    @property
    def constraints(self) -> int:
        return len(self.classes or ()) + (self.id is not None) + (self.index is not None)

    def relaxations(self) -> list["Step"]:
        """Full step, then without index, without id, without classes (deduplicated)."""
        levels = [
            self,
            Step(self.tag, self.classes, self.id),
            Step(self.tag, self.classes),
            Step(self.tag),
        ]
        out: list[Step] = []
        for s in levels:
            if s not in out:
                out.append(s)
        return out

    def to_json(self) -> dict:
        doc: dict = {"tag": self.tag}
        if self.classes:
            doc["classes"] = list(self.classes)
        if self.id is not None:
            doc["id"] = self.id
        if self.index is not None:
            doc["index"] = self.index
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Step":
        classes = doc.get("classes")
        return cls(doc["tag"], tuple(classes) if classes else None, doc.get("id"), doc.get("index"))

    def __str__(self):
        s = self.tag
        if self.id is not None:
            s += f"#{self.id}"
        for c in self.classes or ():
            s += f".{c}"
        if self.index is not None:
            s += f"[{self.index}]"
        return s


@dataclass(frozen=True)
class SelectorRule:
    field_name: str
    path: tuple[Step, ...]
    value_source: str = TEXT

    @property
    def constraints(self) -> int:
        return sum(step.constraints for step in self.path)

    def to_json(self) -> dict:
        return {"path": [s.to_json() for s in self.path], "value_source": self.value_source}

    def sort_key(self, total_matches: int) -> tuple:
        return (total_matches, -self.constraints, len(self.path),
                json.dumps(self.to_json(), sort_keys=True))

    def __str__(self):
        return " > ".join(map(str, self.path)) + f" @{self.value_source}"


@dataclass
class SelectorRuleSet:
    domain: str
    rules: dict[str, SelectorRule]
    trained_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    diagnostics: list[str] = field(default_factory=list, compare=False)

    def to_json(self) -> dict:
        return {
            "domain": self.domain,
            "trained_at": self.trained_at.isoformat(),
            "rules": {name: rule.to_json() for name, rule in self.rules.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SelectorRuleSet":
        rules = {
            name: SelectorRule(name, tuple(Step.from_json(s) for s in r["path"]),
                               r.get("value_source", TEXT))
            for name, r in doc.get("rules", {}).items()
        }
        return cls(doc["domain"], rules, datetime.fromisoformat(doc["trained_at"]))

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SelectorRuleSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TrainingExample:
    page: ParsedPage
    expected: dict[str, str]

    def __post_init__(self):
        for name, value in self.expected.items():
            if value is None or not normalize_space(str(value)):
                raise InductionError(f"expected value for {name!r} is empty")


# -- tree helpers -----------------------------------------------------------

def _parent(el: Tag) -> Tag | None:
    parent = el.parent
    if parent is None or isinstance(parent, BeautifulSoup):
        return None
    return parent


def _classes(el: Tag) -> tuple[str, ...] | None:
    value = el.get("class")
    if not value:
        return None
    if isinstance(value, str):
        value = value.split()
    return tuple(sorted(set(value)))


def child_index(el: Tag) -> int:
    """1-based position among the parent's element children."""
    parent = el.parent
    if parent is None:
        return 1
    n = 0
    for sib in parent.children:
        if isinstance(sib, Tag):
            n += 1
            if sib is el:
                return n
    return n


def full_step(el: Tag) -> Step:
    el_id = el.get("id")
    if isinstance(el_id, list):
        el_id = " ".join(el_id)
    return Step(el.name, _classes(el), el_id or None, child_index(el))


def locator_of(el: Tag) -> tuple[Step, ...]:
    steps = []
    node: Tag | None = el
    while node is not None:
        steps.append(full_step(node))
        node = _parent(node)
    return tuple(reversed(steps))


def text_value(el: Tag) -> str:
    return normalize_space(el.get_text())


def node_value(el: Tag, source: str) -> str | None:
    if source == TEXT:
        return text_value(el)
    name = source.split(":", 1)[1]
    value = el.get(name)
    if value is None:
        return None
    if isinstance(value, list):
        value = " ".join(value)
    return normalize_space(value)


def _value_sources(el: Tag, target: str) -> Iterator[str]:
    if text_value(el) == target and not any(
        text_value(child) == target for child in el.find_all(True, recursive=False)
    ):
        yield TEXT
    for attr in sorted(el.attrs):
        if attr in IGNORED_ATTRS:
            continue
        if node_value(el, f"attribute:{attr}") == target:
            yield f"attribute:{attr}"


@dataclass(frozen=True)
class NodeLocator:
    steps: tuple[Step, ...]
    value_source: str
    node: Tag = field(compare=False, repr=False)


def find_value_nodes(page: ParsedPage, value: str) -> list[NodeLocator]:
    """Nodes whose text (innermost only) or attribute equals ``value`` after whitespace normalization."""
    target = normalize_space(value)
    if not target:
        raise InductionError("value must be non-empty")
    found = []
    for el in page.tree.find_all(True):
        for source in _value_sources(el, target):
            found.append(NodeLocator(locator_of(el), source, el))
    return found


class _PageIndex:
    """Per-page caches: element list, child indices and parents."""

    def __init__(self, page: ParsedPage):
        self.elements = page.tree.find_all(True)
        self.index = {}
        self.parent = {}
        for el in self.elements:
            parent = _parent(el)
            self.parent[id(el)] = parent
        for el in [page.tree, *self.elements]:
            n = 0
            for child in el.children:
                if isinstance(child, Tag):
                    n += 1
                    self.index[id(child)] = n
        self.classes = {id(el): set(_classes(el) or ()) for el in self.elements}

    def matches(self, step: Step, el: Tag) -> bool:
        if el.name != step.tag:
            return False
        if step.index is not None and self.index.get(id(el)) != step.index:
            return False
        if step.id is not None:
            el_id = el.get("id")
            if isinstance(el_id, list):
                el_id = " ".join(el_id)
            if el_id != step.id:
                return False
        if step.classes and not set(step.classes) <= self.classes[id(el)]:
            return False
        return True

    def select(self, path: tuple[Step, ...]) -> list[Tag]:
        out = []
        for el in self.elements:
            node: Tag | None = el
            ok = True
            for step in reversed(path):
                if node is None or not self.matches(step, node):
                    ok = False
                    break
                node = self.parent[id(node)]
            if ok:
                out.append(el)
        return out


def select(page: ParsedPage, path: tuple[Step, ...]) -> list[Tag]:
    return _PageIndex(page).select(path)


def _search_field(
    name: str, indexes: list[_PageIndex], targets: list[str], seeds: list[NodeLocator]
) -> SelectorRule | None:
    best: tuple | None = None
    best_rule: SelectorRule | None = None
    visited: set[tuple] = set()

    def consider(path: tuple[Step, ...], source: str, matched: list[list]) -> None:
        nonlocal best, best_rule
        if any(len(m) != 1 for m in matched):
            return
        for m, target in zip(matched, targets):
            if node_value(m[0][0], source) != target:
                return
        rule = SelectorRule(name, path, source)
        key = rule.sort_key(sum(len(m) for m in matched))
        if best is None or key < best:
            best, best_rule = key, rule

    def extend(path, source, matched, remaining: tuple[Step, ...]) -> None:
        # the same suffix can come from seeds with different ancestor chains
        key = (path, source, remaining)
        if key in visited:
            return
        visited.add(key)
        # any surviving extension only shrinks the match sets, so a page
        # without a correct node kills the whole branch
        for m, target in zip(matched, targets):
            if not any(node_value(node, source) == target for node, _ in m):
                return
        consider(path, source, matched)
        if not remaining:
            return
        for step in remaining[-1].relaxations():
            grown = []
            for idx, m in zip(indexes, matched):
                nxt = []
                for node, anchor in m:
                    parent = idx.parent[id(anchor)]
                    if parent is not None and idx.matches(step, parent):
                        nxt.append((node, parent))
                grown.append(nxt)
            extend((step, *path), source, grown, remaining[:-1])

    for seed in seeds:
        *ancestors, last = seed.steps
        for step in last.relaxations():
            matched = [[(el, el) for el in idx.elements if idx.matches(step, el)]
                       for idx in indexes]
            extend((step,), seed.value_source, matched, tuple(ancestors))
    return best_rule


def _example_domain(examples: list[TrainingExample], domain: str | None) -> str:
    domains = set()
    for ex in examples:
        if ex.page.url:
            domains.add(urls.domain_of(ex.page.url))
    if domain is not None:
        domain = urls.registrable_domain(domain)
        if domains - {domain}:
            raise InductionError(f"examples not from {domain}: {sorted(domains - {domain})}")
        return domain
    if len(domains) > 1:
        raise InductionError(f"examples span several domains: {sorted(domains)}")
    if not domains:
        raise InductionError("cannot determine domain; pass domain=")
    return domains.pop()


def induce_rules(examples: list[TrainingExample], domain: str | None = None) -> SelectorRuleSet:
    if not examples:
        raise InductionError("need at least one training example")
    domain = _example_domain(examples, domain)
    field_names: list[str] = []
    for ex in examples:
        for name in ex.expected:
            if name not in field_names:
                field_names.append(name)

    indexes = {id(ex): _PageIndex(ex.page) for ex in examples}
    ruleset = SelectorRuleSet(domain, {})
    for name in field_names:
        subset = [ex for ex in examples if name in ex.expected]
        targets = [normalize_space(str(ex.expected[name])) for ex in subset]
        seeds = find_value_nodes(subset[0].page, targets[0])
        if not seeds:
            ruleset.diagnostics.append(f"{name}: value not found on first example")
            continue
        rule = _search_field(name, [indexes[id(ex)] for ex in subset], targets, seeds)
        if rule is None:
            ruleset.diagnostics.append(f"{name}: no selector consistent with all examples")
            continue
        for ex, target in zip(subset, targets):
            got = apply_rules(SelectorRuleSet(domain, {name: rule}), ex.page).get(name)
            if got != target:
                raise AssertionError(f"induced rule {rule} does not reproduce {target!r}")
        ruleset.rules[name] = rule
    for msg in ruleset.diagnostics:
        log.info("induction %s: %s", domain, msg)
    return ruleset


def apply_rules(
    rules: SelectorRuleSet, page: ParsedPage, diagnostics: list[str] | None = None
) -> dict[str, str]:
    diagnostics = diagnostics if diagnostics is not None else []
    if page.url:
        try:
            page_domain = urls.domain_of(page.url)
        except urls.URLError:
            page_domain = None
        if page_domain is not None and page_domain != rules.domain:
            diagnostics.append(f"domain mismatch: rules for {rules.domain}, page on {page_domain}")
            return {}
    index = _PageIndex(page)
    out: dict[str, str] = {}
    for name, rule in rules.rules.items():
        nodes = index.select(rule.path)
        if len(nodes) != 1:
            kind = "no match" if not nodes else f"ambiguous match ({len(nodes)})"
            diagnostics.append(f"{name}: {kind}")
            continue
        value = node_value(nodes[0], rule.value_source)
        if value:
            out[name] = value
        else:
            diagnostics.append(f"{name}: empty value")
    return out


def load_examples(directory) -> list[TrainingExample]:
    """Each subdirectory holds ``page.html`` and ``expected.json`` (optionally ``url.txt``)."""
    from .extraction.html import parse_html

    examples = []
    for sub in sorted(p for p in Path(directory).iterdir() if p.is_dir()):
        page_file, expected_file = sub / "page.html", sub / "expected.json"
        if not (page_file.exists() and expected_file.exists()):
            continue
        url_file = sub / "url.txt"
        url = url_file.read_text(encoding="utf-8").strip() if url_file.exists() else ""
        page = parse_html(page_file.read_bytes(), url=url)
        expected = json.loads(expected_file.read_text(encoding="utf-8"))
        examples.append(TrainingExample(page, {k: str(v) for k, v in expected.items()}))
    return examples
