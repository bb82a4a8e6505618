"""Stage functions shared by the individual CLI commands and ``selftrain``.

Every stage writes its output with the same serializer whichever way it is
invoked, so a staged run and an end-to-end run produce identical files.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .bootstrap import (
    BootstrapConfig,
    LabeledCluster,
    harvest_labeled,
    label_cluster,
    sample_balanced,
    type_counts,
)
from .config import PipelineConfig
from .corpus import CorpusHandle, read_corpus, read_jsonl, write_jsonl
from .embeddings import EmbeddingTable, canonical_vectors, load_embeddings
from .evaluate import EvalReport, paired_bootstrap, score
from .spike_cluster import Cluster, ClusterConfig, ClusterRun, cluster_corpus
from .tagger import TaggerConfig, TaggerModel, TriggerExample, predict_examples, read_examples, train

log = logging.getLogger(__name__)

OUTPUT_FILES = {
    "counts": "counts.jsonl",
    "clusters": "clusters.jsonl",
    "model_gold": "model_gold.tsv",
    "labeled": "labeled.jsonl",
    "harvested": "harvested.jsonl",
    "bootstrap": "bootstrap.jsonl",
    "model_selftrain": "model_selftrain.tsv",
    "predictions_gold": "predictions_gold.jsonl",
    "predictions_selftrain": "predictions_selftrain.jsonl",
    "eval_gold": "eval_gold",
    "eval_selftrain": "eval_selftrain",
    "comparison": "comparison.json",
    "funnel": "funnel.png",
    "runlog": "runlog.jsonl",
}


class RunLog:
    """JSON-lines record of per-stage counts."""

    def __init__(self, path: str | Path | None, mode: str = "w") -> None:
        self.path = Path(path) if path is not None else None
        self.records: list[dict[str, Any]] = []
        if self.path is not None and mode == "w":
            self.path.write_text("", encoding="utf-8")

    def record(self, stage: str, **counts: Any) -> dict[str, Any]:
        rec = {"stage": stage, **counts}
        self.records.append(rec)
        log.info("%s: %s", stage, json.dumps(counts, sort_keys=True))
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return rec


def require(path: Path | None, what: str) -> Path:
    if path is None:
        raise FileNotFoundError(f"no {what} path given")
    if not Path(path).exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return Path(path)


def write_json(path: str | Path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---- stages -----------------------------------------------------------------

def run_ingest(corpus_path: Path, runlog: RunLog, counts_out: Path | None = None) -> CorpusHandle:
    corpus = read_corpus(corpus_path)
    if counts_out is not None:
        write_jsonl(counts_out, corpus.counts.to_records())
    runlog.record("ingest", documents=len(corpus), dates=len(corpus.by_date), sentences=corpus.n_sentences,
                  entity_mentions=corpus.counts.total_mentions, distinct_entities=len(corpus.counts.by_corpus))
    return corpus


def run_cluster(corpus: CorpusHandle, cfg: ClusterConfig, runlog: RunLog, out: Path | None = None,
                workers: int = 1) -> ClusterRun:
    run = cluster_corpus(corpus, cfg, workers)
    if out is not None:
        write_jsonl(out, (c.to_json() for c in run.clusters))
    runlog.record("cluster", **run.stats)
    return run


def run_train(examples: Sequence[TriggerExample], cfg: TaggerConfig, runlog: RunLog, out: Path | None = None,
              name: str = "train") -> TaggerModel:
    model = train(examples, cfg=cfg)
    if out is not None:
        model.save(out)
    runlog.record(name, examples=len(examples), ontology=len(model.ontology), features=len(model.weights))
    return model


def run_label(clusters: Sequence[Cluster], corpus: CorpusHandle, model: TaggerModel, cfg: BootstrapConfig,
              runlog: RunLog, out: Path | None = None, workers: int = 1) -> list[LabeledCluster]:
    def one(c: Cluster) -> LabeledCluster | None:
        return label_cluster(c, corpus, model, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, clusters))
    else:
        results = [one(c) for c in clusters]
    labeled = [lc for lc in results if lc is not None]
    if out is not None:
        write_jsonl(out, (lc.to_json() for lc in labeled))
    runlog.record("label", clusters=len(clusters), clusters_labeled=len(labeled),
                  by_type=type_counts_labeled(labeled))
    return labeled


def type_counts_labeled(labeled: Iterable[LabeledCluster]) -> dict[str, int]:
    out: dict[str, int] = {}
    for lc in labeled:
        out[lc.event_type] = out.get(lc.event_type, 0) + 1
    return dict(sorted(out.items()))


def run_assign(labeled: Sequence[LabeledCluster], corpus: CorpusHandle, gold: Sequence[TriggerExample],
               table: EmbeddingTable, cfg: BootstrapConfig, runlog: RunLog, out: Path | None = None) -> list[TriggerExample]:
    warnings: list[str] = []
    canonicals = canonical_vectors(gold, table, warnings)
    stats: dict[str, int] = {}
    harvested = harvest_labeled(labeled, corpus, canonicals, table, cfg, stats)
    if out is not None:
        write_jsonl(out, (ex.to_json() for ex in harvested))
    runlog.record("assign", canonical_types=len(canonicals), oov_types=len(warnings), examples=len(harvested), **stats)
    return harvested


def run_emit(harvested: Sequence[TriggerExample], cfg: BootstrapConfig, runlog: RunLog,
             out: Path | None = None) -> list[TriggerExample]:
    sample = sample_balanced(harvested, cfg)
    if out is not None:
        write_jsonl(out, (ex.to_json() for ex in sample))
    runlog.record("emit", available=type_counts(harvested), emitted=type_counts(sample), total=len(sample))
    return sample


def run_predict(model: TaggerModel, docs: CorpusHandle, runlog: RunLog, out: Path | None = None,
                name: str = "predict") -> list[TriggerExample]:
    preds: list[TriggerExample] = []
    for doc_id in sorted(docs.documents):
        for si, sent in enumerate(docs[doc_id].sentences):
            preds.extend(predict_examples(model, doc_id, si, sent))
    if out is not None:
        write_jsonl(out, (p.to_json() for p in preds))
    runlog.record(name, documents=len(docs), predictions=len(preds))
    return preds


def write_report(report: EvalReport, prefix: Path, title: str) -> None:
    from .report import plot_eval

    write_json(prefix.with_suffix(".json"), report.to_json())
    prefix.with_suffix(".txt").write_text(report.to_table(), encoding="utf-8")
    plot_eval(report, prefix.with_suffix(".png"), title)


def run_eval(preds: Sequence[TriggerExample], gold: Sequence[TriggerExample], runlog: RunLog,
             documents: Iterable[str] | None = None, prefix: Path | None = None, name: str = "eval") -> EvalReport:
    report = score(preds, gold, documents)
    if prefix is not None:
        write_report(report, prefix, prefix.name)
    runlog.record(name, precision=report.precision, recall=report.recall, f1=report.f1,
                  true_positives=report.true_positives, false_positives=report.false_positives,
                  false_negatives=report.false_negatives)
    return report


# ---- end to end -------------------------------------------------------------

@dataclass
class SelfTrainResult:
    clusters: list[Cluster]
    labeled: list[LabeledCluster]
    harvested: list[TriggerExample]
    bootstrap: list[TriggerExample]
    model_gold: TaggerModel
    model_selftrain: TaggerModel
    report_gold: EvalReport | None = None
    report_selftrain: EvalReport | None = None
    comparison: dict[str, Any] | None = None
    runlog: list[dict[str, Any]] = field(default_factory=list)


def selftrain(cfg: PipelineConfig, out_dir: Path | None = None, figures: bool = True) -> SelfTrainResult:
    """Cluster, label, assign, emit and retrain; evaluate both models if a
    held-out set is configured. Writes every intermediate file to ``out_dir``."""
    paths = cfg.paths
    corpus_path = require(paths["corpus"], "corpus")
    gold_path = require(paths["gold"], "gold examples")
    emb_path = require(paths["embeddings"], "embeddings")
    has_test = paths.get("test") is not None and paths.get("heldout") is not None
    if has_test:
        require(paths["test"], "held-out gold")
        require(paths["heldout"], "held-out documents")

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    def f(key: str) -> Path | None:
        return out / OUTPUT_FILES[key] if out is not None else None

    runlog = RunLog(f("runlog"))
    gold = read_examples(gold_path)
    table = load_embeddings(emb_path)

    corpus = run_ingest(corpus_path, runlog, f("counts"))
    model_gold = run_train(gold, cfg.tagger, runlog, f("model_gold"), "train_gold")
    crun = run_cluster(corpus, cfg.cluster, runlog, f("clusters"), cfg.workers)
    labeled = run_label(crun.clusters, corpus, model_gold, cfg.bootstrap, runlog, f("labeled"), cfg.workers)
    harvested = run_assign(labeled, corpus, gold, table, cfg.bootstrap, runlog, f("harvested"))
    boot = run_emit(harvested, cfg.bootstrap, runlog, f("bootstrap"))
    model_self = run_train(list(gold) + boot, cfg.tagger, runlog, f("model_selftrain"), "train_selftrain")

    result = SelfTrainResult(crun.clusters, labeled, harvested, boot, model_gold, model_self)
    if has_test:
        test = read_examples(paths["test"])
        heldout = read_corpus(paths["heldout"])
        docs = list(heldout.documents)
        p0 = run_predict(model_gold, heldout, runlog, f("predictions_gold"), "predict_gold")
        p1 = run_predict(model_self, heldout, runlog, f("predictions_selftrain"), "predict_selftrain")
        result.report_gold = run_eval(p0, test, runlog, docs, f("eval_gold") if figures else None, "eval_gold")
        result.report_selftrain = run_eval(p1, test, runlog, docs, f("eval_selftrain") if figures else None, "eval_selftrain")
        sig = paired_bootstrap(p0, p1, test, docs, cfg.eval.resamples, cfg.eval.seed)
        result.comparison = {
            "f1_gold": result.report_gold.f1,
            "f1_selftrain": result.report_selftrain.f1,
            "f1_gain_points": 100.0 * (result.report_selftrain.f1 - result.report_gold.f1),
            "significance": sig,
        }
        if out is not None:
            write_json(f("comparison"), result.comparison)
            if figures:
                from .report import plot_comparison

                plot_comparison(result.report_gold, result.report_selftrain, out / "comparison.png")
        runlog.record("compare", **result.comparison)

    if out is not None and figures:
        from .report import plot_funnel

        plot_funnel(funnel_counts(runlog.records), f("funnel"))
    result.runlog = runlog.records
    return result


def funnel_counts(records: Sequence[dict[str, Any]]) -> dict[str, int]:
    by_stage = {r["stage"]: r for r in records}
    out = {}
    for stage, key, label in (
        ("ingest", "documents", "documents"),
        ("ingest", "sentences", "sentences"),
        ("cluster", "pairs_scored", "pairs scored"),
        ("cluster", "clusters", "clusters formed"),
        ("label", "clusters_labeled", "clusters labeled"),
        ("assign", "sentences_considered", "sentences considered"),
        ("assign", "sentences_assigned", "sentences assigned"),
        ("assign", "examples", "examples harvested"),
        ("emit", "total", "examples emitted"),
    ):
        if stage in by_stage and key in by_stage[stage]:
            out[label] = int(by_stage[stage][key])
    return out


def read_clusters(path: Path) -> list[Cluster]:
    return [Cluster.from_json(rec) for _, rec in read_jsonl(path)]


def read_labeled(path: Path) -> list[LabeledCluster]:
    return [LabeledCluster.from_json(rec) for _, rec in read_jsonl(path)]
