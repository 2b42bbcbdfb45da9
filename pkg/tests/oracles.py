"""Independent reference implementations used to check the package.

Nothing here imports the module under test's matching or search code; the
oracles only share the parsed tree and the documented rule format.
"""

from __future__ import annotations

import itertools
import json
from urllib.parse import quote_plus

from bs4 import BeautifulSoup, Tag


# -- seeds -------------------------------------------------------------------

def seed_oracle(templates: list[str], keywords: list[str]) -> set[str]:
    """Every template filled with every keyword, as a set."""
    filled = set()
    for template, keyword in itertools.product(templates, keywords):
        filled.add(template.replace("KEYWORD", quote_plus(" ".join(keyword.split()))))
    return filled


# -- politeness --------------------------------------------------------------

def politeness_violations(log: list[tuple[str, float, str]], min_gap: float) -> list[tuple]:
    """Pairs of consecutive dispatches to one domain closer than ``min_gap`` seconds."""
    last: dict[str, float] = {}
    bad = []
    for domain, at, url in sorted(log, key=lambda e: e[1]):
        if domain in last and at - last[domain] < min_gap - 1e-9:
            bad.append((domain, last[domain], at, url))
        last[domain] = at
    return bad


# -- induction ---------------------------------------------------------------

def _ws(text: str) -> str:
    return " ".join(text.split())


def _elements(root) -> list[Tag]:
    out = []

    def walk(node):
        for child in node.contents:
            if isinstance(child, Tag):
                out.append(child)
                walk(child)

    walk(root)
    return out


def _element_parent(el: Tag):
    p = el.parent
    return None if p is None or isinstance(p, BeautifulSoup) else p


def _position(el: Tag) -> int:
    siblings = [c for c in el.parent.contents if isinstance(c, Tag)]
    return next(i for i, c in enumerate(siblings, 1) if c is el)


def _class_set(el: Tag) -> frozenset:
    value = el.get("class") or []
    if isinstance(value, str):
        value = value.split()
    return frozenset(value)


def _id(el: Tag):
    value = el.get("id")
    if isinstance(value, list):
        value = " ".join(value)
    return value or None


def _text(el: Tag) -> str:
    return _ws(el.get_text())


def _value(el: Tag, source: str):
    if source == "text-content":
        return _text(el)
    value = el.get(source.split(":", 1)[1])
    if value is None:
        return None
    if isinstance(value, list):
        value = " ".join(value)
    return _ws(value)


def _sources(el: Tag, target: str) -> list[str]:
    found = []
    if _text(el) == target and all(
        _text(c) != target for c in el.contents if isinstance(c, Tag)
    ):
        found.append("text-content")
    for attr in sorted(el.attrs):
        if attr not in ("class", "id", "style") and _value(el, f"attribute:{attr}") == target:
            found.append(f"attribute:{attr}")
    return found


def _step_levels(el: Tag) -> list[dict]:
    """The four relaxation levels of one step, as rule-file dicts, deduplicated."""
    classes = sorted(_class_set(el))
    full = {"tag": el.name}
    if classes:
        full["classes"] = classes
    if _id(el) is not None:
        full["id"] = _id(el)
    full["index"] = _position(el)
    no_index = {k: v for k, v in full.items() if k != "index"}
    no_id = {k: v for k, v in no_index.items() if k != "id"}
    bare = {"tag": el.name}
    levels = []
    for level in (full, no_index, no_id, bare):
        if level not in levels:
            levels.append(level)
    return levels


def _step_matches(step: dict, el: Tag) -> bool:
    if el.name != step["tag"]:
        return False
    if "index" in step and _position(el) != step["index"]:
        return False
    if "id" in step and _id(el) != step["id"]:
        return False
    return set(step.get("classes", ())) <= _class_set(el)


def oracle_select(tree, path: list[dict]) -> list[Tag]:
    hits = []
    for el in _elements(tree):
        node, ok = el, True
        for step in reversed(path):
            if node is None or not _step_matches(step, node):
                ok = False
                break
            node = _element_parent(node)
        if ok:
            hits.append(el)
    return hits


def _constraints(path: list[dict]) -> int:
    return sum(len(s.get("classes", ())) + ("id" in s) + ("index" in s) for s in path)


def oracle_induce_field(trees: list, targets: list[str]) -> dict | None:
    """Exhaustive search over the candidate lattice for one field.

    Candidates come from every value-carrying node on the first page: every
    suffix of its ancestor chain, with each step at any of its relaxation
    levels. Returns the winning rule as ``{"path": [...], "value_source": ...}``.
    """
    candidates = set()
    for el in _elements(trees[0]):
        for source in _sources(el, targets[0]):
            chain = []
            node = el
            while node is not None:
                chain.append(node)
                node = _element_parent(node)
            chain.reverse()
            for start in range(len(chain)):
                options = [_step_levels(n) for n in chain[start:]]
                for combo in itertools.product(*options):
                    candidates.add(json.dumps({"path": list(combo), "value_source": source},
                                              sort_keys=True))
    best = None
    for doc in candidates:
        rule = json.loads(doc)
        total = 0
        for tree, target in zip(trees, targets):
            hits = oracle_select(tree, rule["path"])
            if len(hits) != 1 or _value(hits[0], rule["value_source"]) != target:
                break
            total += 1
        else:
            key = (total, -_constraints(rule["path"]), len(rule["path"]), doc)
            if best is None or key < best[0]:
                best = (key, rule)
    return best[1] if best else None


def oracle_induce(examples: list[tuple[object, dict[str, str]]]) -> dict[str, dict]:
    """``examples`` are (bs4 tree, expected values) pairs; returns field -> rule dict."""
    names: list[str] = []
    for _, expected in examples:
        names += [n for n in expected if n not in names]
    rules = {}
    for name in names:
        subset = [(t, _ws(e[name])) for t, e in examples if name in e]
        rule = oracle_induce_field([t for t, _ in subset], [v for _, v in subset])
        if rule is not None:
            rules[name] = rule
    return rules


# -- classification ----------------------------------------------------------

def argmax_with_order(scores: dict[str, float], order: list[str]) -> str:
    best = max(scores.values())
    return next(label for label in order if scores[label] == best)
