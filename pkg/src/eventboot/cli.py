"""Command-line entry point: one subcommand per pipeline stage plus ``selftrain``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from .config import DEFAULT_CONFIG, ConfigError, PipelineConfig, load_config
from .corpus import read_corpus
from .embeddings import load_embeddings
from .tagger import TaggerModel, read_examples
from . import pipeline as pl

log = logging.getLogger("eventboot")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--config", type=Path, help="YAML config file (see `eventboot config`)")
    g.add_argument("--seed", type=int, help="seed for training, sampling, resampling and synthesis")
    g.add_argument("--workers", type=int, help="parallel threads (default: available cores)")
    g.add_argument("--theta-pair", type=float, help="pair-score threshold for clustering")
    g.add_argument("--theta-event", type=int, help="extractor mentions needed to label a cluster")
    g.add_argument("--theta-sim", type=float, help="cosine needed to accept a trigger")
    g.add_argument("--per-type-cap", type=int, help="examples emitted per event type")
    g.add_argument("--log", type=Path, dest="runlog", help="append stage counts to this JSON-lines file")
    g.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="eventboot", description="Bootstrap event-trigger training data from same-day news clusters.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[common])

    p = cmd("config", "print the default configuration")

    p = cmd("synth", "generate a synthetic corpus with planted triggers")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = cmd("ingest", "read a corpus and write entity counts")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--out", type=Path, required=True, help="counts JSONL")

    p = cmd("cluster", "group same-day documents by shared rare entities")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--out", type=Path, required=True, help="clusters JSONL")

    p = cmd("train", "train the trigger tagger")
    p.add_argument("--train", type=Path, action="append", help="example JSONL; repeatable (default: gold path)")
    p.add_argument("--out", type=Path, required=True, help="model TSV")

    p = cmd("label", "assign an event type to each cluster")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--clusters", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="labeled clusters JSONL")

    p = cmd("assign", "pick a trigger in every sentence of the labeled clusters")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--gold", type=Path)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--labeled", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="harvested examples JSONL")

    p = cmd("emit", "draw a balanced sample of harvested examples")
    p.add_argument("--harvested", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="bootstrap examples JSONL")

    p = cmd("predict", "tag every sentence of a document set")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--docs", type=Path, help="documents JSONL (default: heldout path)")
    p.add_argument("--out", type=Path, required=True, help="predictions JSONL")

    p = cmd("eval", "score predictions against gold triggers")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--gold", type=Path, help="gold triggers (default: test path)")
    p.add_argument("--docs", type=Path, help="documents the predictions may refer to")
    p.add_argument("--out", type=Path, help="write PREFIX.json, PREFIX.txt and PREFIX.png")

    p = cmd("selftrain", "run every stage, retrain, and compare against the gold-only model")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--gold", type=Path)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--test", type=Path)
    p.add_argument("--heldout", type=Path)
    p.add_argument("--out", type=Path, help="output directory (default: paths.output)")
    p.add_argument("--no-figures", action="store_true")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    seed = args.seed
    ov: dict[str, Any] = {
        "cluster": {"theta_pair": args.theta_pair},
        "bootstrap": {"theta_event": args.theta_event, "theta_sim": args.theta_sim,
                      "per_type_cap": args.per_type_cap, "sample_seed": seed},
        "tagger": {"seed": seed},
        "eval": {"seed": seed},
        "synth": {"seed": seed},
        "paths": {k: getattr(args, k) for k in ("corpus", "gold", "embeddings", "test", "heldout")
                  if getattr(args, k, None) is not None},
    }
    if args.workers is not None:
        ov["workers"] = args.workers
    return ov


def _path(cfg: PipelineConfig, key: str, what: str) -> Path:
    p = cfg.paths.get(key)
    if p is None:
        raise UsageError(f"no {what} given: pass --{key} or set paths.{key} in the config")
    return pl.require(p, what)


def run(args: argparse.Namespace) -> int:
    if args.command == "config":
        sys.stdout.write(DEFAULT_CONFIG)
        return EXIT_OK
    cfg = load_config(args.config, _overrides(args))
    runlog = pl.RunLog(args.runlog, mode="a")
    c = args.command

    if c == "synth":
        from .synth import generate

        written = generate(cfg.synth).write(args.out)
        (args.out / "config.yaml").write_text(DEFAULT_CONFIG, encoding="utf-8")
        for name, path in written.items():
            print(f"{name}\t{path}")
    elif c == "ingest":
        pl.run_ingest(_path(cfg, "corpus", "corpus"), runlog, args.out)
    elif c == "cluster":
        corpus = pl.run_ingest(_path(cfg, "corpus", "corpus"), runlog)
        pl.run_cluster(corpus, cfg.cluster, runlog, args.out, cfg.workers)
    elif c == "train":
        sources = args.train or [_path(cfg, "gold", "gold examples")]
        examples = []
        for src in sources:
            examples.extend(read_examples(pl.require(src, "training examples")))
        pl.run_train(examples, cfg.tagger, runlog, args.out)
    elif c == "label":
        corpus = read_corpus(_path(cfg, "corpus", "corpus"))
        clusters = pl.read_clusters(pl.require(args.clusters, "clusters"))
        model = TaggerModel.load(pl.require(args.model, "model"))
        pl.run_label(clusters, corpus, model, cfg.bootstrap, runlog, args.out, cfg.workers)
    elif c == "assign":
        corpus = read_corpus(_path(cfg, "corpus", "corpus"))
        gold = read_examples(_path(cfg, "gold", "gold examples"))
        table = load_embeddings(_path(cfg, "embeddings", "embeddings"))
        labeled = pl.read_labeled(pl.require(args.labeled, "labeled clusters"))
        pl.run_assign(labeled, corpus, gold, table, cfg.bootstrap, runlog, args.out)
    elif c == "emit":
        harvested = read_examples(pl.require(args.harvested, "harvested examples"))
        pl.run_emit(harvested, cfg.bootstrap, runlog, args.out)
    elif c == "predict":
        model = TaggerModel.load(pl.require(args.model, "model"))
        docs = read_corpus(pl.require(args.docs, "documents") if args.docs else _path(cfg, "heldout", "documents"))
        pl.run_predict(model, docs, runlog, args.out)
    elif c == "eval":
        preds = read_examples(pl.require(args.predictions, "predictions"))
        gold = read_examples(pl.require(args.gold, "gold") if args.gold else _path(cfg, "test", "gold"))
        doc_ids = list(read_corpus(pl.require(args.docs, "documents")).documents) if args.docs else None
        report = pl.run_eval(preds, gold, runlog, doc_ids, args.out)
        sys.stdout.write(report.to_table())
    elif c == "selftrain":
        out = args.out or cfg.paths.get("output")
        if out is None:
            raise UsageError("no output directory: pass --out or set paths.output")
        result = pl.selftrain(cfg, out, figures=not args.no_figures)
        if result.comparison is not None:
            sys.stdout.write("gold only\n" + result.report_gold.to_table())
            sys.stdout.write("gold + bootstrap\n" + result.report_selftrain.to_table())
            sig = result.comparison["significance"]
            print(f"F1 gain {result.comparison['f1_gain_points']:+.2f} points (p = {sig['p_value']:.4f})")
        print(f"outputs in {out}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return run(args)
    except (ConfigError, UsageError) as exc:
        print(f"eventboot: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"eventboot: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
