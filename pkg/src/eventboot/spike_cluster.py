"""Same-day article pair scoring and clustering by rare-entity spikes.

Two articles published on the same day are scored by summing, over the
entities they share, the fraction of that entity's corpus-wide mentions that
fall on that day. Rare entities mentioned heavily on one date contribute
close to 1; entities that are common everywhere contribute almost nothing.
Pairs at or above ``theta_pair`` become edges and connected components of
the edge graph become clusters.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from itertools import combinations
from typing import Any, Iterable, Iterator

from .corpus import CorpusHandle, Document, EntityCounts

log = logging.getLogger(__name__)


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self) -> None:
        self.parent: dict[str, str] = {}
        self.size: dict[str, int] = {}

    def find(self, x: str) -> str:
        parent = self.parent
        if x not in parent:
            parent[x] = x
            self.size[x] = 1
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: str, b: str) -> str:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def groups(self) -> list[list[str]]:
        out: dict[str, list[str]] = defaultdict(list)
        for x in self.parent:
            out[self.find(x)].append(x)
        return [sorted(members) for members in out.values()]


@dataclass(frozen=True)
class PairScore:
    doc_a: str
    doc_b: str
    date: date
    score: float


@dataclass(frozen=True)
class Cluster:
    cluster_id: str
    date: date
    doc_ids: tuple[str, ...]
    shared_entities: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "cluster_id": self.cluster_id,
            "date": self.date.isoformat(),
            "doc_ids": list(self.doc_ids),
            "shared_entities": list(self.shared_entities),
            "edges": [[a, b, s] for a, b, s in self.edges],
        }

    @classmethod
    def from_json(cls, rec: dict[str, Any]) -> Cluster:
        return cls(
            rec["cluster_id"],
            date.fromisoformat(rec["date"]),
            tuple(rec["doc_ids"]),
            tuple(rec.get("shared_entities", ())),
            tuple((a, b, float(s)) for a, b, s in rec.get("edges", ())),
        )


@dataclass(frozen=True)
class ClusterConfig:
    theta_pair: float = 1.0
    min_shared_entities: int = 1
    max_cluster_size: int = 100

    def __post_init__(self) -> None:
        problems = []
        if not self.theta_pair > 0:
            problems.append(f"theta_pair must be > 0, got {self.theta_pair}")
        if self.min_shared_entities < 1:
            problems.append(f"min_shared_entities must be >= 1, got {self.min_shared_entities}")
        if self.max_cluster_size < 2:
            problems.append(f"max_cluster_size must be >= 2, got {self.max_cluster_size}")
        if problems:
            raise ValueError("; ".join(problems))


def _score_shared(shared: Iterable[str], day: date, counts: EntityCounts) -> float:
    by_date, by_corpus = counts.by_date, counts.by_corpus
    total = 0.0
    for e in sorted(shared):
        total += by_date[(e, day)] / by_corpus[e]
    return total


def pair_score(a: Document, b: Document, counts: EntityCounts) -> float:
    """Spike score of two same-day documents; 0.0 when they share no entity."""
    if a.date != b.date:
        raise ValueError(f"pair_score needs same-day documents: {a.doc_id} is {a.date}, {b.doc_id} is {b.date}")
    return _score_shared(a.entity_keys & b.entity_keys, a.date, counts)


def entity_weights(corpus: CorpusHandle, day: date) -> dict[str, float]:
    """Per-entity contribution ``count(e, day) / count(e, corpus)`` for one day."""
    by_date, by_corpus = corpus.counts.by_date, corpus.counts.by_corpus
    keys = set()
    for doc in corpus.docs_on(day):
        keys |= doc.entity_keys
    return {e: by_date[(e, day)] / by_corpus[e] for e in keys}


def _prefix_keys(keys: frozenset[str], weights: dict[str, float], theta: float) -> list[str]:
    # Drop the lightest entities while their total stays below theta. Any
    # pair reaching theta shares its heaviest common entity inside both
    # kept sets, so indexing only the kept set loses no admissible pair.
    # The slack keeps the cut conservative under float rounding.
    limit = theta * (1.0 - 1e-9)
    ordered = sorted(keys, key=lambda e: (weights[e], e))
    dropped = 0.0
    cut = 0
    for e in ordered:
        if dropped + weights[e] >= limit:
            break
        dropped += weights[e]
        cut += 1
    return ordered[cut:]


def candidate_pairs(
    corpus: CorpusHandle,
    day: date,
    min_shared_entities: int = 1,
    theta: float | None = None,
) -> Iterator[tuple[str, str]]:
    """Yield same-day doc pairs sharing at least ``min_shared_entities`` entities.

    Pairs come from an inverted index entity -> documents, each pair once,
    ordered ``(smaller_id, larger_id)`` and sorted. When ``theta`` is given
    the index is restricted to each document's heavy-entity prefix, which
    still yields every pair whose score can reach ``theta``.
    """
    docs = corpus.docs_on(day)
    index: dict[str, list[str]] = defaultdict(list)
    if theta is None:
        for doc in docs:
            for e in doc.entity_keys:
                index[e].append(doc.doc_id)
    else:
        if math.isinf(theta):
            return
        weights = entity_weights(corpus, day)
        for doc in docs:
            for e in _prefix_keys(doc.entity_keys, weights, theta):
                index[e].append(doc.doc_id)

    seen: set[tuple[str, str]] = set()
    for ids in index.values():
        if len(ids) < 2:
            continue
        for a, b in combinations(sorted(ids), 2):
            seen.add((a, b))
    documents = corpus.documents
    for a, b in sorted(seen):
        if len(documents[a].entity_keys & documents[b].entity_keys) >= min_shared_entities:
            yield a, b


def score_day(corpus: CorpusHandle, day: date, cfg: ClusterConfig) -> list[PairScore]:
    """Score the blocked candidate pairs of one day."""
    documents = corpus.documents
    out = []
    for a, b in candidate_pairs(corpus, day, cfg.min_shared_entities, cfg.theta_pair):
        da, db = documents[a], documents[b]
        out.append(PairScore(a, b, day, _score_shared(da.entity_keys & db.entity_keys, day, corpus.counts)))
    return out


def form_clusters(
    scored_pairs: Iterable[PairScore],
    cfg: ClusterConfig,
    entity_sets: dict[str, frozenset[str]] | None = None,
    stats: dict[str, int] | None = None,
) -> list[Cluster]:
    """Connected components over edges with ``score >= theta_pair``.

    Components larger than ``max_cluster_size`` are discarded with a log
    line. ``entity_sets`` (doc_id -> canonical keys) fills in each cluster's
    shared entities; without it they are left empty.
    """
    uf = UnionFind()
    edges: list[PairScore] = []
    day = None
    for p in scored_pairs:
        if day is None:
            day = p.date
        elif p.date != day:
            raise ValueError(f"form_clusters got pairs from two dates: {day} and {p.date}")
        if p.score >= cfg.theta_pair:
            a, b = sorted((p.doc_a, p.doc_b))
            uf.union(a, b)
            edges.append(PairScore(a, b, p.date, p.score))
    if day is None:
        return []

    groups = sorted((g for g in uf.groups() if len(g) >= 2), key=lambda g: g[0])
    member_root = {d: uf.find(d) for g in groups for d in g}
    edges_by_root: dict[str, list[tuple[str, str, float]]] = defaultdict(list)
    for e in edges:
        edges_by_root[member_root[e.doc_a]].append((e.doc_a, e.doc_b, e.score))

    clusters = []
    for members in groups:
        if len(members) > cfg.max_cluster_size:
            log.warning("discarding %d-document component on %s led by %s (max_cluster_size=%d)",
                        len(members), day, members[0], cfg.max_cluster_size)
            if stats is not None:
                stats["discarded_clusters"] = stats.get("discarded_clusters", 0) + 1
            continue
        shared: tuple[str, ...] = ()
        if entity_sets is not None:
            seen_once: set[str] = set()
            multi: set[str] = set()
            for d in members:
                keys = entity_sets[d]
                multi |= seen_once & keys
                seen_once |= keys
            shared = tuple(sorted(multi))
        root = member_root[members[0]]
        clusters.append(Cluster(
            cluster_id=f"{day.isoformat()}-{len(clusters):04d}",
            date=day,
            doc_ids=tuple(members),
            shared_entities=shared,
            edges=tuple(sorted(edges_by_root[root])),
        ))
    return clusters


@dataclass
class ClusterRun:
    clusters: list[Cluster]
    stats: dict[str, int] = field(default_factory=dict)


def _cluster_day(corpus: CorpusHandle, day: date, cfg: ClusterConfig) -> tuple[list[Cluster], dict[str, int]]:
    stats: dict[str, int] = {}
    pairs = score_day(corpus, day, cfg)
    stats["pairs_scored"] = len(pairs)
    stats["edges"] = sum(p.score >= cfg.theta_pair for p in pairs)
    entity_sets = {d: corpus.documents[d].entity_keys for d in corpus.by_date[day]}
    clusters = form_clusters(pairs, cfg, entity_sets, stats)
    return clusters, stats


def cluster_corpus(corpus: CorpusHandle, cfg: ClusterConfig, workers: int = 1) -> ClusterRun:
    """Cluster every date independently and concatenate in date order."""
    days = corpus.dates
    if workers > 1 and len(days) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda d: _cluster_day(corpus, d, cfg), days))
    else:
        results = [_cluster_day(corpus, d, cfg) for d in days]
    run = ClusterRun([])
    for clusters, stats in results:
        run.clusters.extend(clusters)
        for k, v in stats.items():
            run.stats[k] = run.stats.get(k, 0) + v
    run.stats.setdefault("discarded_clusters", 0)
    run.stats["clusters"] = len(run.clusters)
    return run
