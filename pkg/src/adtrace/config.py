"""Pipeline configuration file (YAML with ``${VAR}`` / ``${VAR:-default}`` interpolation).

Example::

    workdir: work
    paths:
      patterns: patterns.tsv
      species: species.csv
      seeds: work/seeds.txt
      page_store: work/pages.store
      rules: rules
      output: out
    crawl:
      workers: 4
      min_delay_ms: 2000
      page_budget: 1000
    classifier:
      backend: baseline           # or http://host:port/zero-shot
      attribute: product
      min_prob: 0.0
    store:
      endpoint: ${STORE_ENDPOINT:-}
      bucket: wildlife-ads
    test_mode:
      enabled: false

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import yaml

from .crawler import CrawlConfig
from .relevance import DEFAULT_LABELS, HYPOTHESIS_TEMPLATE

_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")

DEFAULT_PARTITION = "ads/date={date}/part-{part:04d}.parquet"


class ConfigError(ValueError):
    pass


def interpolate(text: str, env=None) -> str:
    env = os.environ if env is None else env

    def sub(m):
        name, default = m.group(1), m.group(2)
        if name in env:
            return env[name]
        if default is not None:
            return default
        raise ConfigError(f"environment variable {name} is not set")

    return _VAR.sub(sub, text)


@dataclass
class Paths:
    patterns: Path | None = None
    species: Path | None = None
    seeds: Path | None = None
    page_store: Path | None = None
    rules: Path | None = None
    output: Path | None = None


@dataclass
class ClassifierSettings:
    backend: str = "baseline"
    attribute: str = "product"
    labels: list[str] = field(default_factory=lambda: list(DEFAULT_LABELS))
    labels_file: Path | None = None
    hypothesis_template: str = HYPOTHESIS_TEMPLATE
    min_prob: float = 0.0
    relevant_labels: list[str] = field(
        default_factory=lambda: ["a real animal", "an animal body part"])
    concurrency: int = 4


@dataclass
class StoreConfig:
    endpoint: str | None = None
    bucket: str | None = None
    partition_template: str = DEFAULT_PARTITION
    access_key: str | None = None
    secret_key: str | None = None
    upload: bool = True


@dataclass
class TestMode:
    enabled: bool = False
    seed: int = 0
    clock: datetime = datetime(2023, 8, 8, tzinfo=timezone.utc)


@dataclass
class PipelineConfig:
    base_dir: Path
    workdir: Path
    paths: Paths
    crawl: CrawlConfig
    classifier: ClassifierSettings
    store: StoreConfig
    test_mode: TestMode

    @property
    def lock_path(self) -> Path:
        return self.workdir / ".adtrace.lock"

    def stage_dir(self, name: str) -> Path:
        return self.workdir / name

    def ledger(self, name: str) -> Path:
        return self.workdir / f"{name}.ledger"


def _build(cls, data: dict | None, section: str, convert=None):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {', '.join(sorted(unknown))}")
    if convert:
        data = {k: convert(k, v) for k, v in data.items()}
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def load_config(path=None, overrides: dict | None = None) -> PipelineConfig:
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        try:
            raw = yaml.safe_load(interpolate(path.read_text(encoding="utf-8"))) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        base = path.resolve().parent
    else:
        raw, base = {}, Path.cwd()
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    for key, value in (overrides or {}).items():
        raw.setdefault(key, {})
        raw[key].update(value)
    unknown = set(raw) - {"workdir", "paths", "crawl", "classifier", "store", "test_mode"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown))}")

    def resolve(value):
        if value in (None, ""):
            return None
        p = Path(value).expanduser()
        return p if p.is_absolute() else base / p

    workdir = resolve(raw.get("workdir", "work"))
    paths = _build(Paths, raw.get("paths"), "paths", lambda k, v: resolve(v))
    defaults = {
        "seeds": workdir / "seeds.txt",
        "page_store": workdir / "pages.store",
        "rules": base / "rules",
        "output": base / "out",
    }
    for name, default in defaults.items():
        if getattr(paths, name) is None:
            setattr(paths, name, default)

    crawl = _build(CrawlConfig, raw.get("crawl"), "crawl")
    try:
        crawl.validate()
    except ValueError as exc:
        raise ConfigError(f"crawl: {exc}") from None

    classifier = _build(
        ClassifierSettings, raw.get("classifier"), "classifier",
        lambda k, v: resolve(v) if k == "labels_file" else v,
    )
    if classifier.labels_file is not None:
        if not classifier.labels_file.exists():
            raise ConfigError(f"labels file {classifier.labels_file} not found")
        classifier.labels = read_labels(classifier.labels_file)
    if float(classifier.min_prob) < 0:
        raise ConfigError("classifier.min_prob must be >= 0")
    if classifier.concurrency < 1:
        raise ConfigError("classifier.concurrency must be >= 1")
    unknown_relevant = set(classifier.relevant_labels) - set(classifier.labels)
    if unknown_relevant:
        raise ConfigError(f"relevant labels not among candidate labels: {sorted(unknown_relevant)}")

    store = _build(StoreConfig, raw.get("store"), "store")
    store.endpoint = store.endpoint or os.environ.get("STORE_ENDPOINT") or None
    store.access_key = store.access_key or os.environ.get("STORE_ACCESS_KEY", "")
    store.secret_key = store.secret_key or os.environ.get("STORE_SECRET_KEY", "")

    def test_conv(k, v):
        if k == "clock" and isinstance(v, str):
            return datetime.fromisoformat(v.replace("Z", "+00:00")).astimezone(timezone.utc)
        if k == "clock" and isinstance(v, datetime) and v.tzinfo is None:
            return v.replace(tzinfo=timezone.utc)
        return v

    test_mode = _build(TestMode, raw.get("test_mode"), "test_mode", test_conv)
    return PipelineConfig(base, workdir, paths, crawl, classifier, store, test_mode)


def read_labels(path) -> list[str]:
    labels = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    labels = [l for l in labels if l and not l.startswith("#")]
    if not labels:
        raise ConfigError(f"labels file {path} is empty")
    return labels
