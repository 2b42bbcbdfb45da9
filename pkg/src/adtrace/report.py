"""Label distribution and top-domain summaries over ad records."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .relevance import DEFAULT_LABELS

RELEVANT = ("a real animal", "an animal body part")


@dataclass
class LabelDistribution:
    counts: dict[str, int]
    total: int

    def ordered(self) -> list[tuple[str, int]]:
        order = {label: i for i, label in enumerate(self.counts)}
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], order[kv[0]]))


@dataclass
class Report:
    distribution: LabelDistribution
    top_domains: list[tuple[str, int]]
    labels: tuple[str, ...]
    top_k: int


def label_distribution(records: Iterable, labels: Iterable[str] = DEFAULT_LABELS) -> LabelDistribution:
    counts: dict[str, int] = {label: 0 for label in labels}
    total = 0
    for record in records:
        label = record.zero_shot_label
        counts[label] = counts.get(label, 0) + 1
        total += 1
    return LabelDistribution(counts, total)


def top_domains(records: Iterable, labels: Iterable[str] = RELEVANT, k: int = 20) -> list[tuple[str, int]]:
    wanted = set(labels)
    counter = Counter(r.domain for r in records if r.zero_shot_label in wanted)
    return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def build_report(records: Iterable, labels: Iterable[str] = RELEVANT, top_k: int = 20,
                 candidate_labels: Iterable[str] = DEFAULT_LABELS) -> Report:
    records = list(records)
    labels = tuple(labels)
    return Report(label_distribution(records, candidate_labels),
                  top_domains(records, labels, top_k), labels, top_k)


def _table(rows: list[tuple[str, str]], headers: tuple[str, str]) -> str:
    width = max([len(headers[0])] + [len(r[0]) for r in rows])
    num = max([len(headers[1])] + [len(r[1]) for r in rows])
    lines = [f"{headers[0]:<{width}}  {headers[1]:>{num}}", f"{'-' * width}  {'-' * num}"]
    lines += [f"{a:<{width}}  {b:>{num}}" for a, b in rows]
    return "\n".join(lines)


def render_text(report: Report) -> str:
    dist = report.distribution
    label_rows = [(label, str(count)) for label, count in dist.ordered()]
    label_rows.append(("total", str(dist.total)))
    domain_rows = [(domain, str(count)) for domain, count in report.top_domains]
    parts = [
        "Label distribution",
        _table(label_rows, ("label", "count")),
        "",
        f"Top {report.top_k} domains for: {', '.join(report.labels)}",
        _table(domain_rows, ("domain", "count")),
    ]
    return "\n".join(parts) + "\n"


def write_csv(report: Report, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labels_path = directory / "labels.csv"
    domains_path = directory / "domains.csv"
    with open(labels_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "count"])
        writer.writerows(report.distribution.ordered())
    with open(domains_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "count"])
        writer.writerows(report.top_domains)
    return labels_path, domains_path
