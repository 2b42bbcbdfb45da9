import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from adtrace.extraction import parse_html
from adtrace.induction import (
    InductionError,
    SelectorRuleSet,
    TrainingExample,
    apply_rules,
    find_value_nodes,
    induce_rules,
    load_examples,
)
from oracles import oracle_induce

SETS = Path(__file__).parent / "data" / "induction"


def training_sets():
    return sorted(p for p in SETS.iterdir() if p.is_dir())


def as_json(ruleset: SelectorRuleSet) -> dict:
    return {name: rule.to_json() for name, rule in ruleset.rules.items()}


def example(html: str, url: str = "https://www.ebay.com/itm/1", **expected) -> TrainingExample:
    return TrainingExample(parse_html(html.encode(), url=url), expected)


# -- value location -----------------------------------------------------------

def test_single_locator():
    page = parse_html(b'<div class="price"><span>US $1,500.00</span></div>')
    locs = find_value_nodes(page, "US $1,500.00")
    assert len(locs) == 1
    assert [s.tag for s in locs[0].steps] == ["html", "body", "div", "span"]
    assert locs[0].value_source == "text-content"


def test_absent_value():
    assert find_value_nodes(parse_html(b"<p>x</p>"), "y") == []


def test_sibling_locators_in_document_order():
    page = parse_html(b"<ul><li>dup</li><li>dup</li></ul>")
    locs = find_value_nodes(page, "dup")
    assert [l.steps[-1].index for l in locs] == [1, 2]


def test_attribute_locator():
    page = parse_html(b'<meta itemprop="price" content="5.00"><span class="p">5.00</span>')
    sources = sorted(l.value_source for l in find_value_nodes(page, "5.00"))
    assert sources == ["attribute:content", "text-content"]


def test_empty_value_rejected():
    with pytest.raises(InductionError):
        find_value_nodes(parse_html(b"<p>x</p>"), "  ")
    with pytest.raises(InductionError):
        example("<p>x</p>", price=" ")


# -- induction ----------------------------------------------------------------

def test_price_rule_ends_in_div_price_span():
    rs = induce_rules(load_examples(SETS / "price_basic"))
    rule = rs.rules["price"]
    assert rule.value_source == "text-content"
    div, span = rule.path[-2:]
    assert (div.tag, div.classes, span.tag) == ("div", ("price",), "span")


def test_absent_value_field_omitted_with_diagnostic():
    rs = induce_rules(load_examples(SETS / "absent"))
    assert "seller" not in rs.rules and "price" in rs.rules
    assert rs.diagnostics == ["seller: value not found on first example"]


def test_span_beats_meta_attribute():
    rs = induce_rules(load_examples(SETS / "span_vs_meta"))
    rule = rs.rules["price"]
    assert rule.value_source == "text-content"
    assert rule.path[-1].tag == "span" and rule.path[-1].classes == ("price",)


def test_inconsistent_field_omitted():
    rs = induce_rules(load_examples(SETS / "inconsistent"))
    assert sorted(rs.rules) == ["price"]
    assert rs.diagnostics == ["seller: no selector consistent with all examples"]


def test_varying_ids_relaxed():
    rs = induce_rules(load_examples(SETS / "varying_ids"))
    assert all(step.id is None for rule in rs.rules.values() for step in rule.path)


def test_empty_examples():
    with pytest.raises(InductionError):
        induce_rules([])


def test_mixed_domains_rejected():
    a = example("<p>1</p>", "https://www.ebay.com/a", price="1")
    b = example("<p>2</p>", "https://www.ebay.de/b", price="2")
    with pytest.raises(InductionError, match="several domains"):
        induce_rules([a, b])
    with pytest.raises(InductionError, match="not from"):
        induce_rules([a], domain="ebay.de")


def test_domain_from_argument_when_urls_missing():
    ex = TrainingExample(parse_html(b"<p>1</p>"), {"price": "1"})
    assert induce_rules([ex], domain="www.ebay.co.uk").domain == "ebay.co.uk"
    with pytest.raises(InductionError, match="cannot determine"):
        induce_rules([ex])


@pytest.mark.parametrize("training", training_sets(), ids=lambda p: p.name)
def test_matches_brute_force_oracle(training):
    examples = load_examples(training)
    assert all(len(e.page.tree.find_all(True)) <= 200 for e in examples)
    got = as_json(induce_rules(examples))
    expected = oracle_induce([(e.page.tree, e.expected) for e in examples])
    assert json.dumps(got, sort_keys=True) == json.dumps(expected, sort_keys=True)


@pytest.mark.parametrize("training", training_sets(), ids=lambda p: p.name)
def test_training_consistency(training):
    examples = load_examples(training)
    rs = induce_rules(examples)
    for ex in examples:
        out = apply_rules(rs, ex.page)
        for name in rs.rules:
            assert out[name] == " ".join(ex.expected[name].split())


def test_adding_an_example_keeps_consistency():
    examples = load_examples(SETS / "varying_ids")
    first = induce_rules(examples[:2])
    extended = induce_rules(examples)
    third = examples[2]
    for name in extended.rules:
        assert apply_rules(extended, third.page)[name] == third.expected[name]
    assert set(extended.rules) <= set(first.rules)


# -- random DOMs against the oracle ------------------------------------------

_TAGS = ["div", "span", "p", "li"]
_CLASSES = ["a", "b", "price"]


@st.composite
def trees(draw, depth=0):
    n = draw(st.integers(0 if depth else 1, 3 if depth < 3 else 0))
    parts = []
    for _ in range(n):
        tag = draw(st.sampled_from(_TAGS))
        classes = draw(st.lists(st.sampled_from(_CLASSES), max_size=2, unique=True))
        ident = draw(st.sampled_from([None, "x", "y"]))
        attrs = (f' class="{" ".join(classes)}"' if classes else "") + (f' id="{ident}"' if ident else "")
        inner = draw(trees(depth + 1))
        text = draw(st.sampled_from(["", "V", "W", "9"]))
        parts.append(f"<{tag}{attrs}>{text}{inner}</{tag}>")
    return "".join(parts)


@settings(max_examples=150, deadline=None)
@given(bodies=st.lists(trees(), min_size=1, max_size=3))
def test_random_pages_match_oracle(bodies):
    examples = []
    for i, body in enumerate(bodies):
        page = parse_html(f"<html><body>{body}</body></html>".encode(), url=f"https://r.example/{i}")
        examples.append(TrainingExample(page, {"v": "V", "w": "W"}))
    rs = induce_rules(examples)
    expected = oracle_induce([(e.page.tree, e.expected) for e in examples])
    assert json.dumps(as_json(rs), sort_keys=True) == json.dumps(expected, sort_keys=True)


# -- apply / serialization ----------------------------------------------------

@pytest.fixture(scope="module")
def price_rules():
    return induce_rules(load_examples(SETS / "price_basic"))


def test_apply_on_fresh_page(price_rules):
    html = ('<html><body><div class="header"><a href="/">Home</a></div><div class="listing">'
            '<h1>Bengal tiger tooth</h1><div class="price"><span>US $2,000.00</span></div>'
            '<div class="seller"><span>someone</span></div></div></body></html>')
    page = parse_html(html.encode(), url="https://www.ebay.com/itm/77")
    assert apply_rules(price_rules, page) == {"price": "US $2,000.00", "seller": "someone"}


def test_apply_missing_node(price_rules):
    diagnostics = []
    page = parse_html(b"<html><body><div class='listing'><h1>x</h1></div></body></html>",
                      url="https://www.ebay.com/itm/3")
    assert apply_rules(price_rules, page, diagnostics) == {}
    assert diagnostics == ["price: no match", "seller: no match"]


def test_apply_ambiguous(price_rules):
    block = '<div class="price"><span>US $1.00</span></div>'
    html = f'<html><body><div class="listing">{block * 3}</div></body></html>'
    diagnostics = []
    out = apply_rules(price_rules, parse_html(html.encode(), url="https://www.ebay.com/x"), diagnostics)
    assert "price" not in out
    assert "price: ambiguous match (3)" in diagnostics


def test_apply_other_domain(price_rules):
    diagnostics = []
    page = parse_html(b"<p>x</p>", url="https://www.etsy.com/listing/1")
    assert apply_rules(price_rules, page, diagnostics) == {}
    assert diagnostics[0].startswith("domain mismatch")


def test_rule_set_round_trip(tmp_path, price_rules):
    path = tmp_path / "rules" / "ebay.com.json"
    price_rules.save(path)
    loaded = SelectorRuleSet.load(path)
    assert loaded == price_rules
