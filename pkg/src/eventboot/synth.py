"""Synthetic parallel-news corpus with planted event clusters and ground truth.

Each planted cluster is a handful of same-day articles about one event: they
share one to three rare entities and each carries one event sentence whose
trigger comes from an *easy* or a *hard* tier of that event type's lexicon.
Easy triggers sit close to the type's direction in the emitted embedding
space and are the only ones that appear in the training gold; hard triggers
are further out, so they can only be picked up through embedding similarity.
Distractor articles mention Zipf-distributed common entities and no events.

Clusters are split per event type into ``gold`` (easy event sentences become
training gold), ``test`` (held out, written to a separate document file) and
``news`` (unlabeled). Gold and news cluster articles plus the distractors
form the news corpus.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, asdict
from datetime import date, timedelta
from pathlib import Path
from typing import Any

import numpy as np

from .bootstrap import STOPWORDS
from .embeddings import EmbeddingTable, write_embeddings
from .corpus import EntityMention, write_jsonl
from .tagger import Source, TriggerExample

EVENT_TYPE_NAMES = (
    "Attack", "Die", "Transfer-Money", "Meet", "Elect", "Arrest-Jail", "Start-Position",
    "End-Position", "Transport", "Injure", "Sue", "Marry", "Demonstrate", "Transfer-Ownership",
)

FILLER = """
officials report statement morning evening week season talks plan deal program council
agency market region committee team club company board season budget election press
court city state police game match result record office project policy minister source
news crowd weather traffic meeting schedule review update network service coverage
""".split()
FILLER = list(dict.fromkeys(FILLER))
DAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]
VERBS = ["said", "added", "noted", "reported", "confirmed", "remained", "discussed", "announced"]

_SYLLABLES = """
ka ro mi ta ve lo sa du ne bri gal tor fen mar vos pel rin dak sul wen
tam ko zar lin ber hal mun tes qui vor nel dor pra ske lum gor tis bal fy
""".split()

_EVENT_TEMPLATES = (
    ("A", "T", "B", "on", "DAY", "."),
    ("on", "DAY", ",", "A", "T", "B", "."),
    ("A", "T", "B", "in", "C", ",", "F", "V", "."),
    ("officials", "V", "A", "T", "B", "after", "the", "F", "."),
    ("the", "F", "V", "A", "T", "B", "on", "DAY", "."),
    ("the", "T", "of", "B", "by", "A", "V", "the", "F", "."),
)
_BACKGROUND_TEMPLATES = (
    ("C", "officials", "V", "the", "F", "F", "was", "F", "."),
    ("the", "F", "in", "C", "V", "F", "on", "DAY", "."),
    ("C", "and", "C", "V", "the", "F", "F", "."),
    ("C", "V", "C", "F", "on", "DAY", "."),
    ("the", "F", "of", "C", "V", "the", "F", "."),
)


@dataclass(frozen=True)
class SynthSpec:
    n_event_types: int = 5
    n_days: int = 30
    clusters_per_day: int = 4  # per event type
    paraphrases_per_cluster: int = 4
    distractor_docs_per_day: int = 10
    entity_zipf_exponent: float = 1.1
    trigger_lexicon: dict[str, list[tuple[str, str]]] | None = None
    seed: int = 0
    easy_triggers_per_type: int = 4
    hard_triggers_per_type: int = 8
    easy_paraphrases: int = 2
    background_sentences: int = 1
    decoy_rate: float = 0.15
    entity_overlap_rate: float = 0.05
    common_entities: int = 40
    gold_fraction: float = 0.2
    test_fraction: float = 0.2
    dim: int = 64
    start_date: str = "2015-01-01"

    def __post_init__(self) -> None:
        problems = []
        for name in ("n_days", "clusters_per_day", "distractor_docs_per_day",
                     "easy_triggers_per_type", "hard_triggers_per_type", "easy_paraphrases",
                     "background_sentences", "common_entities"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if self.n_event_types < 1:
            problems.append("n_event_types must be >= 1")
        if self.paraphrases_per_cluster < 2:
            problems.append("paraphrases_per_cluster must be >= 2")
        if self.easy_paraphrases > self.paraphrases_per_cluster:
            problems.append("easy_paraphrases cannot exceed paraphrases_per_cluster")
        if not (0 <= self.gold_fraction and 0 <= self.test_fraction and self.gold_fraction + self.test_fraction <= 1):
            problems.append("gold_fraction and test_fraction must be >= 0 with a sum <= 1")
        for name in ("decoy_rate", "entity_overlap_rate"):
            if not 0 <= getattr(self, name) <= 1:
                problems.append(f"{name} must lie in [0, 1]")
        if self.dim < 2 * self.n_event_types + 8:
            problems.append("dim too small for the number of event types")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def event_types(self) -> list[str]:
        names = list(EVENT_TYPE_NAMES[: self.n_event_types])
        names += [f"Type-{k}" for k in range(len(names), self.n_event_types)]
        return names

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class SynthCorpus:
    spec: SynthSpec
    documents: list[dict[str, Any]]
    heldout: list[dict[str, Any]]
    gold: list[TriggerExample]
    test: list[TriggerExample]
    truth: dict[str, Any]
    embeddings: EmbeddingTable
    lexicon: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def planted(self) -> set[tuple[str, int, tuple[int, int], str]]:
        """Keys of every planted trigger in every split."""
        out = set()
        for c in self.truth["clusters"]:
            for doc_id, si, ti, _word, _tier in c["triggers"]:
                out.add((doc_id, si, (ti, ti + 1), c["event_type"]))
        return out

    def cluster_map(self, split: str | None = None) -> dict[str, str]:
        """doc_id -> ground-truth cluster id."""
        return {d: c["cluster_id"] for c in self.truth["clusters"]
                if split is None or c["split"] == split for d in c["doc_ids"]}

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "documents": out / "documents.jsonl",
            "heldout": out / "heldout.jsonl",
            "gold": out / "gold.jsonl",
            "test": out / "test.jsonl",
            "truth": out / "truth.json",
            "embeddings": out / "embeddings.txt",
        }
        write_jsonl(paths["documents"], self.documents)
        write_jsonl(paths["heldout"], self.heldout)
        write_jsonl(paths["gold"], (ex.to_json() for ex in self.gold))
        write_jsonl(paths["test"], (ex.to_json() for ex in self.test))
        with open(paths["truth"], "w", encoding="utf-8") as fh:
            json.dump(self.truth, fh, indent=1, sort_keys=True)
            fh.write("\n")
        write_embeddings(paths["embeddings"], self.embeddings)
        return paths


class _Names:
    """Unique pseudo-words drawn from a fixed syllable inventory."""

    def __init__(self, rng: random.Random, reserved: set[str]) -> None:
        self.rng = rng
        self.used = set(reserved)

    def word(self, min_syl: int = 2, max_syl: int = 3) -> str:
        # large corpora use up the short words; widen after repeated collisions
        for extra in range(8):
            for _ in range(200):
                n = self.rng.randint(min_syl + extra, max_syl + extra)
                w = "".join(self.rng.choice(_SYLLABLES) for _ in range(n))
                if w not in self.used:
                    self.used.add(w)
                    return w
        raise RuntimeError("syllable inventory exhausted")

    def entity(self, kind: str) -> tuple[str, ...]:
        if kind == "PER":
            return (self.word().capitalize(), self.word().capitalize())
        if kind == "ORG":
            return (self.word().capitalize(), self.rng.choice(["Corp", "Group", "United", "Agency"]))
        return (self.word(3, 4).capitalize(),)


def _unit(rng: np.random.Generator, dims: slice, total: int) -> np.ndarray:
    v = np.zeros(total)
    v[dims] = rng.standard_normal(dims.stop - dims.start)
    return v / np.linalg.norm(v)


def _embed(spec: SynthSpec, types: list[str], lexicon: dict[str, list[tuple[str, str]]],
           decoys: dict[str, list[str]], plain_words: list[str], seed: int) -> EmbeddingTable:
    # Axes: one per event type, then a block of trigger noise directions, then a
    # block for every unrelated word, so unrelated words are exactly orthogonal
    # to every event direction.
    rng = np.random.default_rng(seed)
    n_types = len(types)
    rest = spec.dim - n_types
    trig_block = slice(n_types, n_types + rest // 2)
    plain_block = slice(n_types + rest // 2, spec.dim)
    tier_cos = {"easy": (0.85, 0.95), "hard": (0.5, 0.7), "decoy": (0.45, 0.55)}
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    for k, etype in enumerate(types):
        axis = np.zeros(spec.dim)
        axis[k] = 1.0
        entries = list(lexicon.get(etype, ())) + [(w, "decoy") for w in decoys.get(etype, ())]
        for word, tier in entries:
            lo, hi = tier_cos[tier]
            c = rng.uniform(lo, hi)
            rows.append(c * axis + math.sqrt(1 - c * c) * _unit(rng, trig_block, spec.dim))
            tokens.append(word)
    for word in plain_words:
        rows.append(_unit(rng, plain_block, spec.dim))
        tokens.append(word)
    matrix = np.array(rows).reshape(len(rows), spec.dim)
    return EmbeddingTable(tokens, np.round(matrix, 6))


def _zipf_weights(n: int, s: float) -> list[float]:
    return [1.0 / (r ** s) for r in range(1, n + 1)]


def generate(spec: SynthSpec = SynthSpec()) -> SynthCorpus:
    """Generate a corpus; identical specs give identical outputs."""
    rng = random.Random(spec.seed)
    types = spec.event_types
    names = _Names(rng, set(STOPWORDS) | set(FILLER) | set(DAYS) | set(VERBS) | {"officials"})

    if spec.trigger_lexicon is not None:
        lexicon = {t: list(spec.trigger_lexicon.get(t, ())) for t in types}
        for entries in lexicon.values():
            names.used.update(w for w, _ in entries)
    else:
        lexicon = {
            t: [(names.word(), "easy") for _ in range(spec.easy_triggers_per_type)]
               + [(names.word(), "hard") for _ in range(spec.hard_triggers_per_type)]
            for t in types
        }
    easy = {t: [w for w, tier in lexicon[t] if tier == "easy"] for t in types}
    hard = {t: [w for w, tier in lexicon[t] if tier == "hard"] for t in types}
    decoys = {t: [names.word() for _ in range(3)] for t in types}

    common = []
    for k in range(spec.common_entities):
        kind = ("GPE", "ORG", "PER")[k % 3]
        common.append((names.entity(kind), kind))
    common_w = _zipf_weights(len(common), spec.entity_zipf_exponent)

    def pick_common() -> tuple[tuple[str, ...], str]:
        return rng.choices(common, weights=common_w)[0]

    # cluster splits, per event type
    n_per_type = spec.n_days * spec.clusters_per_day
    n_gold = round(spec.gold_fraction * n_per_type)
    n_test = round(spec.test_fraction * n_per_type)
    split_of: dict[tuple[int, int, int], str] = {}
    for ti in range(len(types)):
        slots = [(d, ti, k) for d in range(spec.n_days) for k in range(spec.clusters_per_day)]
        rng.shuffle(slots)
        for j, slot in enumerate(slots):
            split_of[slot] = "gold" if j < n_gold else "test" if j < n_gold + n_test else "news"

    start = date.fromisoformat(spec.start_date)
    width = len(str(max(spec.n_days - 1, 0)))
    documents: list[dict[str, Any]] = []
    heldout: list[dict[str, Any]] = []
    gold: list[TriggerExample] = []
    test: list[TriggerExample] = []
    truth_clusters: list[dict[str, Any]] = []

    def realize(template: tuple[str, ...], slots: dict[str, Any]) -> tuple[list[str], list[dict[str, Any]], int | None]:
        tokens: list[str] = []
        entities: list[dict[str, Any]] = []
        trig = None
        commons = iter(slots.get("C", ()))
        for sym in template:
            if sym in ("A", "B", "C", "R"):
                ent, kind = next(commons) if sym == "C" else slots[sym]
                entities.append({"surface": " ".join(ent), "type": kind, "token_span": [len(tokens), len(tokens) + len(ent)]})
                tokens.extend(ent)
            elif sym == "T":
                trig = len(tokens)
                tokens.append(slots["T"])
            elif sym == "F":
                fills = slots.get("F")
                tokens.append(fills.pop() if fills else rng.choice(FILLER))
            elif sym == "V":
                tokens.append(rng.choice(VERBS))
            elif sym == "DAY":
                tokens.append(slots["DAY"])
            else:
                tokens.append(sym)
        if tokens[0][0].islower():
            tokens[0] = tokens[0].capitalize()
        return tokens, entities, trig

    def background(day_word: str, extra: list, decoy: str | None) -> tuple[list[str], list[dict[str, Any]]]:
        template = rng.choice(_BACKGROUND_TEMPLATES)
        n_c = template.count("C")
        slots: dict[str, Any] = {"DAY": day_word, "C": [pick_common() for _ in range(n_c)]}
        n_f = template.count("F")
        fills = [rng.choice(FILLER) for _ in range(n_f)]
        if decoy is not None and fills:
            fills[rng.randrange(len(fills))] = decoy
        slots["F"] = fills
        tokens, ents, _ = realize(template, slots)
        for ent, kind in extra:
            # trailing clause naming a remaining shared entity
            tokens = tokens[:-1] + ["with"]
            ents.append({"surface": " ".join(ent), "type": kind, "token_span": [len(tokens), len(tokens) + len(ent)]})
            tokens += list(ent) + ["."]
        return tokens, ents

    def sentence_rec(tokens: list[str], ents: list[dict[str, Any]]) -> dict[str, Any]:
        return {"text": " ".join(tokens), "tokens": tokens, "entities": ents}

    for d in range(spec.n_days):
        day = start + timedelta(days=d)
        day_word = DAYS[day.weekday()]
        prev_rare: list[tuple[tuple[str, ...], str]] = []
        for ti, etype in enumerate(types):
            for k in range(spec.clusters_per_day):
                split = split_of[(d, ti, k)]
                cid = f"gt-{d:0{width}d}-{ti}-{k}"
                n_shared = rng.randint(1, 3)
                shared = []
                for _ in range(n_shared):
                    kind = rng.choice(("PER", "ORG", "GPE"))
                    shared.append((names.entity(kind), kind))
                if prev_rare and rng.random() < spec.entity_overlap_rate:
                    shared.append(rng.choice(prev_rare))
                prev_rare.extend(shared[:n_shared])
                tiers = ["easy"] * spec.easy_paraphrases + ["hard"] * (spec.paraphrases_per_cluster - spec.easy_paraphrases)
                rng.shuffle(tiers)
                doc_ids, triggers = [], []
                for p, tier in enumerate(tiers):
                    doc_id = f"d{d:0{width}d}-t{ti}-c{k}-p{p}"
                    pool = easy[etype] if tier == "easy" else hard[etype]
                    if not pool:
                        pool = easy[etype] or hard[etype]
                    word = rng.choice(pool)
                    agent = shared[0]
                    patient = shared[1] if len(shared) > 1 else pick_common()
                    if rng.random() < 0.5 and len(shared) > 1:
                        agent, patient = patient, agent
                    template = rng.choice(_EVENT_TEMPLATES)
                    ev_tokens, ev_ents, trig = realize(template, {
                        "A": agent, "B": patient, "T": word, "DAY": day_word, "C": [pick_common()],
                    })
                    leftovers = [e for e in shared if e is not agent and e is not patient]
                    n_sent = 1 + spec.background_sentences
                    event_pos = rng.randrange(n_sent)
                    sentences = []
                    bg_done = 0
                    for s in range(n_sent):
                        if s == event_pos:
                            sentences.append(sentence_rec(ev_tokens, ev_ents))
                            continue
                        extra = leftovers if bg_done == 0 else []
                        decoy = rng.choice(decoys[etype]) if rng.random() < spec.decoy_rate else None
                        sentences.append(sentence_rec(*background(day_word, extra, decoy)))
                        bg_done += 1
                    if spec.background_sentences == 0 and leftovers:
                        sentences.append(sentence_rec(*background(day_word, leftovers, None)))
                    rec = {"doc_id": doc_id, "date": day.isoformat(), "title": " ".join(ev_tokens[:6]), "sentences": sentences}
                    (heldout if split == "test" else documents).append(rec)
                    doc_ids.append(doc_id)
                    triggers.append([doc_id, event_pos, trig, word, tier])
                    ex = TriggerExample(
                        doc_id=doc_id,
                        tokens=tuple(ev_tokens),
                        trigger_span=(trig, trig + 1),
                        event_type=etype,
                        entities=tuple(EntityMention.from_surface(e["surface"], e["type"], e["token_span"]) for e in ev_ents),
                        source=Source.GOLD,
                        sentence_index=event_pos,
                    )
                    if split == "test":
                        test.append(ex)
                    elif split == "gold" and tier == "easy":
                        gold.append(ex)
                truth_clusters.append({
                    "cluster_id": cid,
                    "date": day.isoformat(),
                    "event_type": etype,
                    "split": split,
                    "doc_ids": doc_ids,
                    "shared_entities": sorted({" ".join(e).casefold() for e, _ in shared}),
                    "triggers": triggers,
                })
        for j in range(spec.distractor_docs_per_day):
            doc_id = f"d{d:0{width}d}-x{j:04d}"
            sentences = [sentence_rec(*background(day_word, [], None)) for _ in range(1 + spec.background_sentences)]
            documents.append({"doc_id": doc_id, "date": day.isoformat(), "title": " ".join(sentences[0]["tokens"][:6]), "sentences": sentences})

    plain = sorted(set(FILLER) | set(DAYS) | set(VERBS) | set(STOPWORDS) | {"officials", "with"})
    table = _embed(spec, types, lexicon, decoys, plain, spec.seed)
    truth = {
        "spec": spec.to_json(),
        "event_types": types,
        "lexicon": {t: [list(x) for x in lexicon[t]] for t in types},
        "decoys": decoys,
        "common_entities": [" ".join(e).casefold() for e, _ in common],
        "clusters": truth_clusters,
    }
    return SynthCorpus(spec, documents, heldout, gold, test, truth, table, lexicon)
