"""Turn article clusters into heuristically labeled trigger examples.

A cluster is labeled when the baseline extractor finds at least
``theta_event`` mentions of exactly one event type across its sentences.
Every sentence of a labeled cluster then gets at most one trigger: the
content token whose embedding is most similar to the event type's canonical
vector, provided that similarity exceeds ``theta_sim``.
"""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .corpus import CorpusHandle, Sentence
from .embeddings import CanonicalVector, EmbeddingTable
from .spike_cluster import Cluster
from .tagger import Source, TaggerModel, TriggerExample, predict

log = logging.getLogger(__name__)

# Function words never chosen as triggers.
STOPWORDS = frozenset("""
a an the and or but if of in on at to for from by with about as into over
after before under between through is are was were be been has have
had do does did not no it its this that these he she they we i you
""".split())


# How a cluster whose extractor output mixes event types is labeled.
#   plurality: the type with strictly the most mentions, if it has >= theta_event;
#              a tie for the most is skipped. Raising theta_event only ever
#              removes labels.
#   skip:      skip whenever two or more types reach theta_event.
MULTI_TYPE_RULES = ("plurality", "skip")


@dataclass(frozen=True)
class BootstrapConfig:
    theta_event: int = 2
    theta_sim: float = 0.4
    per_type_cap: int = 200
    sample_seed: int = 0
    min_margin: float = 0.0
    multi_type: str = "plurality"

    def __post_init__(self) -> None:
        problems = []
        if self.multi_type not in MULTI_TYPE_RULES:
            problems.append(f"multi_type must be one of {', '.join(MULTI_TYPE_RULES)}, got {self.multi_type!r}")
        if self.theta_event < 1:
            problems.append(f"theta_event must be >= 1, got {self.theta_event}")
        if not 0.0 <= self.theta_sim <= 1.0:
            problems.append(f"theta_sim must be in [0, 1], got {self.theta_sim}")
        if self.per_type_cap < 1:
            problems.append(f"per_type_cap must be >= 1, got {self.per_type_cap}")
        if self.min_margin < 0:
            problems.append(f"min_margin must be >= 0, got {self.min_margin}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class LabeledCluster:
    cluster: Cluster
    event_type: str
    supporting_mentions: tuple[tuple[str, int, int], ...]

    def to_json(self) -> dict[str, Any]:
        rec = self.cluster.to_json()
        rec["event_type"] = self.event_type
        rec["supporting_mentions"] = [list(m) for m in self.supporting_mentions]
        return rec

    @classmethod
    def from_json(cls, rec: dict[str, Any]) -> LabeledCluster:
        return cls(Cluster.from_json(rec), rec["event_type"],
                   tuple((d, int(s), int(t)) for d, s, t in rec["supporting_mentions"]))


def label_cluster(cluster: Cluster, corpus: CorpusHandle, model: TaggerModel,
                  cfg: BootstrapConfig = BootstrapConfig()) -> LabeledCluster | None:
    """Label ``cluster`` with the event type the extractor finds at least
    ``theta_event`` times, or return None.

    When several types are found, ``cfg.multi_type`` decides; see
    :data:`MULTI_TYPE_RULES`.
    """
    mentions: dict[str, list[tuple[str, int, int]]] = {}
    for doc_id in cluster.doc_ids:
        for si, sent in enumerate(corpus[doc_id].sentences):
            for p in predict(model, sent):
                if p.margin >= cfg.min_margin:
                    mentions.setdefault(p.event_type, []).append((doc_id, si, p.token_index))
    if not mentions:
        return None
    if cfg.multi_type == "skip":
        reached = sorted(t for t, found in mentions.items() if len(found) >= cfg.theta_event)
        if len(reached) > 1:
            log.info("skipping cluster %s: several event types reach theta_event (%s)",
                     cluster.cluster_id, ", ".join(reached))
            return None
    else:
        top = max(len(found) for found in mentions.values())
        reached = sorted(t for t, found in mentions.items() if len(found) == top >= cfg.theta_event)
        if len(reached) > 1:
            log.info("skipping cluster %s: event types tie with %d mentions (%s)",
                     cluster.cluster_id, top, ", ".join(reached))
            return None
    if not reached:
        return None
    etype = reached[0]
    return LabeledCluster(cluster, etype, tuple(mentions[etype]))


def _candidate(token: str) -> bool:
    return token.casefold() not in STOPWORDS and any(ch.isalnum() for ch in token)


def assign_trigger(sentence: Sentence | TriggerExample, canonical: CanonicalVector, table: EmbeddingTable,
                   cfg: BootstrapConfig = BootstrapConfig()) -> tuple[int, float] | None:
    """Most similar content token to the canonical vector, if above ``theta_sim``.

    Entity tokens, stopwords, punctuation and out-of-vocabulary tokens are
    not candidates. Ties keep the earliest token.
    """
    if canonical.vector.shape[0] != table.dim:
        raise ValueError(f"canonical vector dim {canonical.vector.shape[0]} != table dim {table.dim}")
    in_entity = set()
    for ent in sentence.entities:
        in_entity.update(range(*ent.token_span))
    idx, rows = [], []
    for i, tok in enumerate(sentence.tokens):
        if i in in_entity or not _candidate(tok):
            continue
        row = table.row(tok)
        if row is not None:
            idx.append(i)
            rows.append(row)
    if not idx:
        return None
    target = canonical.vector
    tnorm = float(np.linalg.norm(target))
    if tnorm == 0.0:
        return None
    mat = table.matrix[rows]
    norms = np.linalg.norm(mat, axis=1)
    dots = mat @ target
    sims = np.zeros(len(idx))
    nz = norms > 0
    sims[nz] = np.clip(dots[nz] / (norms[nz] * tnorm), -1.0, 1.0)
    best = int(np.argmax(sims))  # first maximum on ties
    sim = float(sims[best])
    if sim > cfg.theta_sim:
        return idx[best], sim
    return None


def harvest_labeled(labeled: Iterable[LabeledCluster], corpus: CorpusHandle,
                    canonicals: dict[str, CanonicalVector], table: EmbeddingTable,
                    cfg: BootstrapConfig = BootstrapConfig(), stats: dict[str, int] | None = None) -> list[TriggerExample]:
    """Assign triggers in every sentence of every labeled cluster."""
    out: list[TriggerExample] = []
    seen: set[tuple[str, ...]] = set()
    considered = assigned = dups = 0
    for lc in labeled:
        canon = canonicals.get(lc.event_type)
        if canon is None:
            log.warning("no canonical vector for %s; cluster %s yields nothing", lc.event_type, lc.cluster.cluster_id)
            continue
        for doc_id in lc.cluster.doc_ids:
            for si, sent in enumerate(corpus[doc_id].sentences):
                considered += 1
                hit = assign_trigger(sent, canon, table, cfg)
                if hit is None:
                    continue
                assigned += 1
                if sent.tokens in seen:
                    dups += 1
                    continue
                seen.add(sent.tokens)
                i, sim = hit
                out.append(TriggerExample(
                    doc_id=doc_id,
                    tokens=sent.tokens,
                    trigger_span=(i, i + 1),
                    event_type=lc.event_type,
                    entities=sent.entities,
                    source=Source.BOOTSTRAP,
                    cluster_id=lc.cluster.cluster_id,
                    similarity=sim,
                    sentence_index=si,
                    pos=sent.pos,
                    lemmas=sent.lemmas,
                ))
    if stats is not None:
        stats["sentences_considered"] = stats.get("sentences_considered", 0) + considered
        stats["sentences_assigned"] = stats.get("sentences_assigned", 0) + assigned
        stats["duplicates_dropped"] = stats.get("duplicates_dropped", 0) + dups
    return out


def label_clusters(clusters: Iterable[Cluster], corpus: CorpusHandle, model: TaggerModel,
                   cfg: BootstrapConfig = BootstrapConfig()) -> list[LabeledCluster]:
    return [lc for lc in (label_cluster(c, corpus, model, cfg) for c in clusters) if lc is not None]


def harvest(clusters: Iterable[Cluster], corpus: CorpusHandle, model: TaggerModel,
            canonicals: dict[str, CanonicalVector], table: EmbeddingTable,
            cfg: BootstrapConfig = BootstrapConfig()) -> list[TriggerExample]:
    """Label clusters with the baseline model, then assign triggers."""
    return harvest_labeled(label_clusters(clusters, corpus, model, cfg), corpus, canonicals, table, cfg)


def sample_balanced(examples: Sequence[TriggerExample], cfg: BootstrapConfig = BootstrapConfig()) -> list[TriggerExample]:
    """Up to ``per_type_cap`` examples per event type, drawn without
    replacement, then shuffled. Deterministic for a given ``sample_seed``."""
    rng = random.Random(cfg.sample_seed)
    by_type: dict[str, list[TriggerExample]] = {}
    for ex in examples:
        by_type.setdefault(ex.event_type, []).append(ex)
    out: list[TriggerExample] = []
    for etype in sorted(by_type):
        pool = by_type[etype]
        out.extend(rng.sample(pool, min(cfg.per_type_cap, len(pool))))
    rng.shuffle(out)
    return out


def type_counts(examples: Iterable[TriggerExample]) -> dict[str, int]:
    return dict(sorted(Counter(ex.event_type for ex in examples).items()))
