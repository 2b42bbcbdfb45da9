"""Test-mode project scaffolding for end-to-end runs against the fixture marketplace."""

from __future__ import annotations

from pathlib import Path

import yaml

import marketplace as mk
from adtrace.cli import main
from adtrace.report import RELEVANT

STAGES = ["gen-seeds", "crawl", "extract", "classify", "sink"]


def make_project(root: Path, market: mk.Marketplace, proxy: str, keyword: str = "macaw",
                 store: dict | None = None, **crawl) -> Path:
    """Write patterns, species list and config under ``root``; returns the config path."""
    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for seed in market.seeds:
        host = seed.split("/")[2]
        lines.append(f"{host.removeprefix('www.')}\t{seed.replace(keyword, 'KEYWORD')}")
    (root / "patterns.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (root / "species.csv").write_text(f"scientific_name,english_names\n{keyword},\n",
                                      encoding="utf-8")
    config = {
        "workdir": "work",
        "paths": {"patterns": "patterns.tsv", "species": "species.csv", "output": "out"},
        "crawl": {"workers": 4, "min_delay_ms": 5, "page_budget": 1000, "proxy": proxy, **crawl},
        "classifier": {"backend": "baseline"},
        "store": store or {"upload": False},
        "test_mode": {"enabled": True, "seed": 1, "clock": "2023-08-08T00:00:00Z"},
    }
    path = root / "adtrace.yaml"
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path


def run_stages(config: Path, stages=STAGES) -> None:
    for stage in stages:
        code = main([stage, "--config", str(config)])
        if code != 0:
            raise AssertionError(f"{stage} exited with {code}")


def expected_relevant(market: mk.Marketplace) -> int:
    return sum(1 for label in market.labels.values() if label in RELEVANT)


def output_files(root: Path) -> list[Path]:
    return sorted((root / "out").rglob("*.parquet"))
