"""Zero-shot relevance classification of ads.

Any backend speaking the JSON protocol below can be plugged in::

    POST {"text": str, "hypothesis_template": str, "candidate_labels": [str]}
    ->   {"labels": [str], "scores": [float]}      # parallel, sorted descending

``BaselineBackend`` is a deterministic keyword scorer used offline and in tests.
"""

from __future__ import annotations

import logging
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Iterator, Protocol

import httpx

log = logging.getLogger(__name__)

HYPOTHESIS_TEMPLATE = "This product advertisement is about {}."
DEFAULT_LABELS = (
    "a real animal",
    "a toy",
    "a print of an animal",
    "an object",
    "a faux animal",
    "an animal body part",
    "a faux animal body part",
)
UNCLASSIFIED = "__unclassified__"
SUM_TOLERANCE = 1e-3

LEXICON: dict[str, tuple[str, ...]] = {
    "a real animal": (
        "live", "alive", "pet", "pets", "puppy", "puppies", "kitten", "kittens", "chick",
        "chicks", "hatchling", "hatchlings", "juvenile", "breeder", "captive bred",
        "for adoption", "pair",
    ),
    "a toy": ("plush", "stuffed", "toy", "toys", "figurine", "figurines", "doll", "puppet"),
    "a print of an animal": (
        "print", "prints", "poster", "postcard", "postcards", "painting", "canvas", "photo",
        "photograph", "lithograph", "sticker", "stamp", "drawing", "engraving",
    ),
    "an object": (
        "mug", "keychain", "necklace", "pendant", "sculpture", "statue", "ornament", "vase",
        "carving", "carved", "lamp", "cup", "shirt", "t-shirt", "bag", "crystal", "brooch",
    ),
    "a faux animal": ("faux", "fake", "artificial", "imitation", "synthetic"),
    "an animal body part": (
        "claw", "claws", "skin", "skins", "skull", "skulls", "ivory", "taxidermy", "tooth",
        "teeth", "horn", "horns", "feather", "feathers", "rug", "pelt", "pelts", "hide",
        "tusk", "tusks", "bone", "bones", "fur", "talon", "talons", "scales", "shell",
    ),
    "a faux animal body part": (
        "faux fur", "fake fur", "replica skull", "resin skull", "faux skull", "faux horn",
        "faux taxidermy", "replica tooth", "resin cast", "replica",
    ),
}


class ClassificationError(Exception):
    pass


class TransportError(ClassificationError):
    """Backend unreachable; safe to retry."""


class ProtocolError(ClassificationError):
    def __init__(self, message: str, payload=None):
        self.payload = payload
        super().__init__(f"{message}; payload={payload!r}")


@dataclass(frozen=True)
class ZeroShotRequest:
    text: str
    candidate_labels: tuple[str, ...] = DEFAULT_LABELS
    hypothesis_template: str = HYPOTHESIS_TEMPLATE

    def __post_init__(self):
        object.__setattr__(self, "candidate_labels", tuple(self.candidate_labels))
        if not self.candidate_labels:
            raise ValueError("candidate_labels must not be empty")
        if len(set(self.candidate_labels)) != len(self.candidate_labels):
            raise ValueError("candidate_labels must be pairwise distinct")
        if self.hypothesis_template.count("{}") != 1:
            raise ValueError("hypothesis_template must contain '{}' exactly once")

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "hypothesis_template": self.hypothesis_template,
            "candidate_labels": list(self.candidate_labels),
        }


@dataclass(frozen=True)
class ClassificationResult:
    scores: tuple[tuple[str, float], ...]

    @property
    def top_label(self) -> str:
        return self.scores[0][0]

    @property
    def top_prob(self) -> float:
        return self.scores[0][1]

    def as_dict(self) -> dict[str, float]:
        return dict(self.scores)


def default_label_set() -> list[str]:
    return list(DEFAULT_LABELS)


class Backend(Protocol):
    def __call__(self, request: ZeroShotRequest) -> dict: ...


def _term_pattern(term: str) -> re.Pattern:
    return re.compile(r"(?<!\w)" + r"\s+".join(map(re.escape, term.split())) + r"(?!\w)",
                      re.IGNORECASE)


_PATTERNS = {label: [_term_pattern(t) for t in terms] for label, terms in LEXICON.items()}


def lexicon_hits(text: str, label: str) -> int:
    return sum(len(p.findall(text)) for p in _PATTERNS.get(label, ()))


def baseline_scores(request: ZeroShotRequest) -> dict[str, float]:
    raw = {label: 1 + lexicon_hits(request.text, label) for label in request.candidate_labels}
    total = sum(raw.values())
    return {label: value / total for label, value in raw.items()}


def rank(probabilities: dict[str, float], labels: Iterable[str]) -> ClassificationResult:
    order = {label: i for i, label in enumerate(labels)}
    ranked = sorted(probabilities.items(), key=lambda kv: (-kv[1], order[kv[0]]))
    return ClassificationResult(tuple(ranked))


def baseline_classify(request: ZeroShotRequest) -> ClassificationResult:
    return rank(baseline_scores(request), request.candidate_labels)


class BaselineBackend:
    name = "baseline"

    def __call__(self, request: ZeroShotRequest) -> dict:
        result = baseline_classify(request)
        return {"labels": [l for l, _ in result.scores], "scores": [p for _, p in result.scores]}


class HttpBackend:
    def __init__(self, url: str, client: httpx.Client | None = None, timeout: float = 30.0):
        self.url = url
        self.name = url
        self.client = client or httpx.Client(timeout=timeout)

    def __call__(self, request: ZeroShotRequest) -> dict:
        try:
            resp = self.client.post(self.url, json=request.to_json())
        except httpx.TransportError as exc:
            raise TransportError(f"backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"backend returned HTTP {resp.status_code}", resp.text)
        try:
            return resp.json()
        except ValueError:
            raise ProtocolError("backend returned non-JSON body", resp.text) from None


def make_backend(target: str, client: httpx.Client | None = None) -> Backend:
    if target == "baseline":
        return BaselineBackend()
    return HttpBackend(target, client=client)


def validate_payload(payload, request: ZeroShotRequest) -> dict[str, float]:
    if not isinstance(payload, dict):
        raise ProtocolError("payload is not an object", payload)
    labels, scores = payload.get("labels"), payload.get("scores")
    if not isinstance(labels, list) or not isinstance(scores, list) or len(labels) != len(scores):
        raise ProtocolError("labels/scores must be parallel arrays", payload)
    expected = set(request.candidate_labels)
    if len(set(labels)) != len(labels) or set(labels) != expected:
        raise ProtocolError("labels do not match candidate labels", payload)
    probs: dict[str, float] = {}
    for label, score in zip(labels, scores):
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise ProtocolError("non-numeric score", payload)
        score = float(score)
        if math.isnan(score) or score < 0 or score > 1:
            raise ProtocolError("score outside [0, 1]", payload)
        probs[label] = score
    total = sum(probs.values())
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise ProtocolError(f"scores sum to {total}", payload)
    return {label: p / total for label, p in probs.items()}


def classify(request: ZeroShotRequest, backend: Backend) -> ClassificationResult:
    if not request.text or not request.text.strip():
        raise ValueError("text to classify is empty")
    payload = backend(request)
    probs = validate_payload(payload, request)
    return rank(probs, request.candidate_labels)


def classify_with_retry(
    request: ZeroShotRequest,
    backend: Backend,
    attempts: int = 3,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
) -> ClassificationResult | None:
    """Classify, retrying transport errors; None once attempts are exhausted."""
    for attempt in range(attempts):
        try:
            return classify(request, backend)
        except TransportError as exc:
            log.warning("backend attempt %d/%d failed: %s", attempt + 1, attempts, exc)
            if attempt + 1 < attempts:
                sleep(backoff * (2 ** attempt))
    return None


def annotate(records: Iterable, backend: Backend, attribute: str = "product",
             labels: Iterable[str] = DEFAULT_LABELS,
             template: str = HYPOTHESIS_TEMPLATE, concurrency: int = 1,
             sleep: Callable[[float], None] = time.sleep) -> list:
    """Attach ``zero_shot_label``/``zero_shot_prob`` to every record, keeping failures."""
    labels = tuple(labels)

    def one(record):
        text = getattr(record, attribute, None) or ""
        if not text.strip():
            return replace(record, zero_shot_label=UNCLASSIFIED, zero_shot_prob=0.0)
        req = ZeroShotRequest(text, labels, template)
        try:
            result = classify_with_retry(req, backend, sleep=sleep)
        except ProtocolError as exc:
            log.warning("protocol error for %s: %s", getattr(record, "url", "?"), exc)
            result = None
        if result is None:
            return replace(record, zero_shot_label=UNCLASSIFIED, zero_shot_prob=0.0)
        return replace(record, zero_shot_label=result.top_label, zero_shot_prob=result.top_prob)

    records = list(records)
    if concurrency <= 1:
        return [one(r) for r in records]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(one, records))


def filter_records(records: Iterable, relevant_labels: Iterable[str],
                   min_prob: float = 0.0) -> Iterator:
    relevant = set(relevant_labels)
    for record in records:
        if record.zero_shot_label in relevant and record.zero_shot_prob >= min_prob:
            yield record
