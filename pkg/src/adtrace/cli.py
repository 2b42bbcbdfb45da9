"""``adtrace`` command line: one subcommand per pipeline stage.

Exit codes: 0 success, 1 stage failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from filelock import FileLock, Timeout

from . import pipeline
from .config import ConfigError, load_config, read_labels
from .report import RELEVANT, render_text, write_csv

log = logging.getLogger("adtrace")

EXIT_OK, EXIT_STAGE, EXIT_CONFIG = 0, 1, 2


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True, default=str))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adtrace", description=__doc__.splitlines()[0].replace("``", ""))
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline config file (YAML)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-seeds", parents=[common], help="expand URL templates x keywords")
    p.add_argument("--patterns", type=Path)
    p.add_argument("--species", type=Path)
    p.add_argument("--out", type=Path, help="seed file to write")

    p = sub.add_parser("crawl", parents=[common], help="scoped crawl from the seed file")
    p.add_argument("--seeds", type=Path)
    p.add_argument("--budget", type=int, help="page budget")
    p.add_argument("--workers", type=int)
    p.add_argument("--min-delay-ms", type=int)

    sub.add_parser("extract", parents=[common], help="page store -> product fields")

    p = sub.add_parser("induce", parents=[common], help="learn selector rules from examples")
    p.add_argument("--domain", required=True)
    p.add_argument("--examples", type=Path, required=True,
                   help="directory of example subdirectories (page.html + expected.json)")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("classify", parents=[common], help="zero-shot relevance annotation")
    p.add_argument("--input", type=Path, help="parquet file or directory of extracted records")
    p.add_argument("--attr", choices=["product", "title", "text", "description"])
    p.add_argument("--labels-file", type=Path)
    p.add_argument("--backend", help="'baseline' or the backend URL")
    p.add_argument("--min-prob", type=float)

    p = sub.add_parser("sink", parents=[common], help="write parquet batches and upload")
    p.add_argument("--no-upload", action="store_true")

    p = sub.add_parser("report", parents=[common], help="label distribution and top domains")
    p.add_argument("--input", type=Path, help="records directory (default: configured output)")
    p.add_argument("--label", action="append", dest="labels",
                   help=f"label filter for the domain table (default: {', '.join(RELEVANT)})")
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--csv-dir", type=Path)

    p = sub.add_parser("serve", help="serve the baseline zero-shot backend over HTTP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _overrides(args) -> dict:
    ov: dict = {}
    cmd = args.command
    if cmd == "gen-seeds":
        paths = {k: str(v) for k, v in (("patterns", args.patterns), ("species", args.species),
                                         ("seeds", args.out)) if v is not None}
        if paths:
            ov["paths"] = paths
    elif cmd == "crawl":
        if args.seeds is not None:
            ov["paths"] = {"seeds": str(args.seeds)}
        crawl = {k: v for k, v in (("page_budget", args.budget), ("workers", args.workers),
                                   ("min_delay_ms", args.min_delay_ms)) if v is not None}
        if crawl:
            ov["crawl"] = crawl
    elif cmd == "classify":
        cls = {}
        if args.attr:
            cls["attribute"] = args.attr
        if args.backend:
            cls["backend"] = args.backend
        if args.min_prob is not None:
            cls["min_prob"] = args.min_prob
        if args.labels_file is not None:
            labels = read_labels(args.labels_file)
            cls["labels"] = labels
            cls["relevant_labels"] = [l for l in RELEVANT if l in labels] or labels[:1]
        if cls:
            ov["classifier"] = cls
    return ov


def _run(args) -> int:
    if args.command == "serve":
        import uvicorn

        uvicorn.run("adtrace.service:app", host=args.host, port=args.port)
        return EXIT_OK

    cfg = load_config(args.config, _overrides(args))

    if args.command == "report":
        source = args.input or cfg.paths.output
        rep = pipeline.report(source, args.labels or list(RELEVANT), args.top_k,
                              cfg.classifier.labels)
        sys.stdout.write(render_text(rep))
        if args.csv_dir:
            write_csv(rep, args.csv_dir)
        return EXIT_OK

    cfg.workdir.mkdir(parents=True, exist_ok=True)
    try:
        with FileLock(str(cfg.lock_path), timeout=0):
            if args.command == "gen-seeds":
                summary = pipeline.gen_seeds(cfg)
                print(f"{summary['patterns']} patterns, {summary['keywords']} keywords, "
                      f"{summary['seeds']} seeds")
                if summary["keywords"] == 0:
                    print("warning: no keywords; seed file is empty", file=sys.stderr)
            elif args.command == "crawl":
                summary = pipeline.crawl(cfg)
            elif args.command == "extract":
                summary = pipeline.extract(cfg)
            elif args.command == "induce":
                summary = pipeline.induce(cfg, args.domain, args.examples, args.out)
            elif args.command == "classify":
                summary = pipeline.classify(cfg, args.input)
            elif args.command == "sink":
                summary = pipeline.sink(cfg, upload=not args.no_upload)
            else:  # pragma: no cover - argparse restricts choices
                raise ConfigError(f"unknown command {args.command}")
            _emit({"stage": args.command, **summary})
    except Timeout:
        print(f"error: another adtrace command holds {cfg.lock_path}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except pipeline.StageError as exc:
        _emit({"stage": args.command, "error": str(exc), **exc.summary})
        return EXIT_STAGE
    except Exception as exc:
        log.debug("stage failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
