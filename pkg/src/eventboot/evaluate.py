"""Micro-averaged trigger scoring with exact span and type matching."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .tagger import TriggerExample

log = logging.getLogger(__name__)


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass
class Cell:
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0

    @property
    def precision(self) -> float:
        return prf(self.true_positives, self.false_positives, self.false_negatives)[0]

    @property
    def recall(self) -> float:
        return prf(self.true_positives, self.false_positives, self.false_negatives)[1]

    @property
    def f1(self) -> float:
        return prf(self.true_positives, self.false_positives, self.false_negatives)[2]

    def to_json(self) -> dict[str, Any]:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass
class EvalReport(Cell):
    per_type: dict[str, Cell] = field(default_factory=dict)
    duplicates_dropped: int = 0

    def to_json(self) -> dict[str, Any]:
        rec = super().to_json()
        rec["duplicates_dropped"] = self.duplicates_dropped
        rec["per_type"] = {t: c.to_json() for t, c in sorted(self.per_type.items())}
        return rec

    def to_table(self) -> str:
        rows = [(t, c) for t, c in sorted(self.per_type.items())] + [("MICRO", self)]
        width = max([len("type")] + [len(t) for t, _ in rows])
        lines = [f"{'type':<{width}}  {'P':>6}  {'R':>6}  {'F1':>6}  {'TP':>5}  {'FP':>5}  {'FN':>5}"]
        lines.append("-" * len(lines[0]))
        for name, c in rows:
            if name == "MICRO":
                lines.append("-" * len(lines[0]))
            lines.append(
                f"{name:<{width}}  {c.precision:>6.4f}  {c.recall:>6.4f}  {c.f1:>6.4f}  "
                f"{c.true_positives:>5}  {c.false_positives:>5}  {c.false_negatives:>5}"
            )
        return "\n".join(lines) + "\n"


def _check_docs(predictions: Iterable[TriggerExample], known: set[str]) -> None:
    for ex in predictions:
        if ex.doc_id not in known:
            raise ValueError(f"prediction references document {ex.doc_id!r} absent from the gold set")


def score(predictions: Sequence[TriggerExample], gold: Sequence[TriggerExample],
          documents: Iterable[str] | None = None) -> EvalReport:
    """Score predicted triggers against gold triggers.

    A prediction is correct when (doc_id, sentence_index, trigger_span,
    event_type) matches a not yet matched gold trigger. Identical duplicate
    predictions count once. ``documents`` widens the set of doc ids a
    prediction may refer to beyond those that carry gold triggers.
    """
    known = {g.doc_id for g in gold}
    if documents is not None:
        known.update(documents)
    _check_docs(predictions, known)

    unique = list(dict.fromkeys(p.key for p in predictions))
    dups = len(predictions) - len(unique)
    if dups:
        log.info("dropped %d duplicate predictions before scoring", dups)
    remaining = Counter(g.key for g in gold)

    per_type: dict[str, Cell] = defaultdict(Cell)
    for key in unique:
        cell = per_type[key[3]]
        if remaining[key] > 0:
            remaining[key] -= 1
            cell.true_positives += 1
        else:
            cell.false_positives += 1
    for key, left in remaining.items():
        if left:
            per_type[key[3]].false_negatives += left

    report = EvalReport(duplicates_dropped=dups, per_type=dict(per_type))
    for c in per_type.values():
        report.true_positives += c.true_positives
        report.false_positives += c.false_positives
        report.false_negatives += c.false_negatives
    return report


def _per_doc_counts(predictions: Sequence[TriggerExample], gold: Sequence[TriggerExample],
                    docs: Sequence[str]) -> np.ndarray:
    pos = {d: i for i, d in enumerate(docs)}
    counts = np.zeros((len(docs), 3), dtype=np.int64)
    by_doc_pred: dict[str, list[TriggerExample]] = defaultdict(list)
    by_doc_gold: dict[str, list[TriggerExample]] = defaultdict(list)
    for p in predictions:
        by_doc_pred[p.doc_id].append(p)
    for g in gold:
        by_doc_gold[g.doc_id].append(g)
    for d, i in pos.items():
        r = score(by_doc_pred.get(d, []), by_doc_gold.get(d, []), documents=[d])
        counts[i] = (r.true_positives, r.false_positives, r.false_negatives)
    return counts


def _f1_rows(tp: np.ndarray, fp: np.ndarray, fn: np.ndarray) -> np.ndarray:
    denom = 2 * tp + fp + fn
    return np.divide(2 * tp, denom, out=np.zeros(tp.shape, dtype=np.float64), where=denom > 0)


def paired_bootstrap(system_a: Sequence[TriggerExample], system_b: Sequence[TriggerExample],
                     gold: Sequence[TriggerExample], documents: Iterable[str] | None = None,
                     resamples: int = 10_000, seed: int = 0) -> dict[str, float]:
    """Paired bootstrap over documents for ``F1(b) - F1(a)``.

    Returns the observed difference and the one-sided p-value, the share of
    resampled corpora in which system b does not beat system a.
    """
    docs = sorted({g.doc_id for g in gold} | set(documents or ()))
    if not docs:
        raise ValueError("paired_bootstrap needs at least one document")
    ca = _per_doc_counts(system_a, gold, docs)
    cb = _per_doc_counts(system_b, gold, docs)
    observed = prf(*cb.sum(axis=0).tolist())[2] - prf(*ca.sum(axis=0).tolist())[2]
    rng = np.random.default_rng(seed)
    worse = 0
    n = len(docs)
    chunk = max(1, min(resamples, 2_000_000 // n))
    done = 0
    while done < resamples:
        m = min(chunk, resamples - done)
        idx = rng.integers(0, n, size=(m, n))
        sa = ca[idx].sum(axis=1)
        sb = cb[idx].sum(axis=1)
        delta = _f1_rows(sb[:, 0], sb[:, 1], sb[:, 2]) - _f1_rows(sa[:, 0], sa[:, 1], sa[:, 2])
        worse += int(np.count_nonzero(delta <= 0))
        done += m
    return {"f1_delta": observed, "p_value": worse / resamples, "resamples": resamples, "documents": n}
