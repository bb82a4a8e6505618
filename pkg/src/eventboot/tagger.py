"""Per-token linear trigger classifier trained with averaged perceptron updates.

Every token is classified into one event type of the ontology or ``NONE``.
Features follow the usual trigger templates: the token itself, a context
window with entity tokens replaced by their type, window bigrams, suffixes,
the type of an enclosing or nearest entity mention, and optional POS/lemma.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence

from .corpus import EntityMention, read_jsonl

NONE = "NONE"
MODEL_FORMAT = "eventboot-tagger/1"
FEATURE_FAMILIES = ("token", "window", "bigram", "suffix", "entity", "pos", "lemma")


class Source(str, Enum):
    GOLD = "GOLD"
    BOOTSTRAP = "BOOTSTRAP"
    PREDICTED = "PREDICTED"


class SentenceLike(Protocol):
    tokens: Sequence[str]
    entities: Sequence[EntityMention]
    pos: Sequence[str] | None
    lemmas: Sequence[str] | None


@dataclass(frozen=True)
class TriggerExample:
    """One sentence with one typed trigger span."""

    doc_id: str
    tokens: tuple[str, ...]
    trigger_span: tuple[int, int]
    event_type: str
    entities: tuple[EntityMention, ...] = ()
    source: Source = Source.GOLD
    cluster_id: str | None = None
    similarity: float | None = None
    sentence_index: int = 0
    pos: tuple[str, ...] | None = None
    lemmas: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        s, e = self.trigger_span
        if not (0 <= s < e <= len(self.tokens)):
            raise ValueError(f"{self.doc_id}: trigger_span {self.trigger_span} outside {len(self.tokens)} tokens")

    @property
    def trigger(self) -> str:
        s, e = self.trigger_span
        return " ".join(self.tokens[s:e])

    @property
    def key(self) -> tuple[str, int, tuple[int, int], str]:
        return (self.doc_id, self.sentence_index, self.trigger_span, self.event_type)

    def to_json(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "doc_id": self.doc_id,
            "sentence_index": self.sentence_index,
            "tokens": list(self.tokens),
            "entities": [e.to_json() for e in self.entities],
            "trigger_span": list(self.trigger_span),
            "event_type": self.event_type,
            "source": self.source.value,
        }
        if self.cluster_id is not None:
            rec["cluster_id"] = self.cluster_id
        if self.similarity is not None:
            rec["similarity"] = self.similarity
        if self.pos is not None:
            rec["pos"] = list(self.pos)
        if self.lemmas is not None:
            rec["lemma"] = list(self.lemmas)
        return rec

    @classmethod
    def from_json(cls, rec: dict[str, Any]) -> TriggerExample:
        return cls(
            doc_id=rec["doc_id"],
            tokens=tuple(rec["tokens"]),
            trigger_span=(int(rec["trigger_span"][0]), int(rec["trigger_span"][1])),
            event_type=rec["event_type"],
            entities=tuple(EntityMention.from_surface(e["surface"], e["type"], e["token_span"]) for e in rec.get("entities", ())),
            source=Source(rec.get("source", "GOLD")),
            cluster_id=rec.get("cluster_id"),
            similarity=rec.get("similarity"),
            sentence_index=int(rec.get("sentence_index", 0)),
            pos=tuple(rec["pos"]) if rec.get("pos") is not None else None,
            lemmas=tuple(rec["lemma"]) if rec.get("lemma") is not None else None,
        )


@dataclass(frozen=True)
class TaggerConfig:
    window: int = 2
    epochs: int = 10
    seed: int = 0
    families: tuple[str, ...] = FEATURE_FAMILIES

    def __post_init__(self) -> None:
        problems = []
        if self.window < 0:
            problems.append(f"window must be >= 0, got {self.window}")
        if self.epochs < 1:
            problems.append(f"epochs must be >= 1, got {self.epochs}")
        unknown = set(self.families) - set(FEATURE_FAMILIES)
        if unknown:
            problems.append(f"unknown feature families: {sorted(unknown)}")
        if problems:
            raise ValueError("; ".join(problems))

    def to_json(self) -> dict[str, Any]:
        return {"window": self.window, "epochs": self.epochs, "seed": self.seed, "families": list(self.families)}


@dataclass(frozen=True)
class Prediction:
    token_index: int
    event_type: str
    margin: float


def _dist_bucket(d: int) -> str:
    if d <= 2:
        return str(d)
    if d <= 5:
        return "3-5"
    return "6+"


def _entity_index(n: int, entities: Sequence[EntityMention]) -> list[str | None]:
    types: list[str | None] = [None] * n
    for ent in entities:
        s, e = ent.token_span
        for k in range(max(s, 0), min(e, n)):
            types[k] = ent.ner_type
    return types


def featurize(sentence: SentenceLike, token_index: int, cfg: TaggerConfig = TaggerConfig(),
              _ent_types: list[str | None] | None = None) -> set[str]:
    """Feature strings for one token of ``sentence``."""
    tokens = sentence.tokens
    n = len(tokens)
    i = token_index
    fam = cfg.families
    ent_types = _ent_types if _ent_types is not None else _entity_index(n, sentence.entities)
    tok = tokens[i]
    low = tok.casefold()
    feats: set[str] = set()
    if "token" in fam:
        feats.add("tok=" + tok)
        feats.add("low=" + low)
    if "suffix" in fam:
        feats.add("suf3=" + low[-3:])
        feats.add("suf4=" + low[-4:])

    def ctx(k: int) -> str:
        if k < 0:
            return "<s>"
        if k >= n:
            return "</s>"
        t = ent_types[k]
        return "<" + t + ">" if t is not None else tokens[k].casefold()

    w = cfg.window
    if "window" in fam:
        for off in range(-w, w + 1):
            if off:
                feats.add(f"w[{off}]={ctx(i + off)}")
    if "bigram" in fam:
        for off in range(-w, w):
            feats.add(f"bi[{off}]={ctx(i + off)}|{ctx(i + off + 1)}")
    if "entity" in fam:
        if ent_types[i] is not None:
            feats.add("entity-type=" + ent_types[i])
            feats.add("nearent=" + ent_types[i])
        else:
            best = None
            for ent in sentence.entities:
                s, e = ent.token_span
                d = s - i if s > i else i - e + 1
                if best is None or d < best[0] or (d == best[0] and s < best[1]):
                    best = (d, s, ent.ner_type)
            if best is None:
                feats.add("nearent=" + NONE)
            else:
                feats.add("nearent=" + best[2])
                feats.add("entdist=" + _dist_bucket(best[0]))
    if "pos" in fam and sentence.pos is not None:
        feats.add("pos=" + sentence.pos[i])
    if "lemma" in fam and sentence.lemmas is not None:
        feats.add("lemma=" + sentence.lemmas[i])
    return feats


def sentence_features(sentence: SentenceLike, cfg: TaggerConfig) -> list[tuple[str, ...]]:
    ent_types = _entity_index(len(sentence.tokens), sentence.entities)
    return [tuple(sorted(featurize(sentence, i, cfg, ent_types))) for i in range(len(sentence.tokens))]


def _ranked(scores: dict[str, float]) -> list[tuple[str, float]]:
    # highest score first; ties go to NONE, then the smallest type name
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0] != NONE, kv[0]))


@dataclass
class TaggerModel:
    weights: dict[str, dict[str, float]]
    ontology: tuple[str, ...]
    config: TaggerConfig = field(default_factory=TaggerConfig)

    @property
    def labels(self) -> tuple[str, ...]:
        return (NONE,) + self.ontology

    def scores(self, feats: Iterable[str]) -> dict[str, float]:
        scores = dict.fromkeys(self.labels, 0.0)
        weights = self.weights
        for f in feats:
            row = weights.get(f)
            if row:
                for label, w in row.items():
                    scores[label] += w
        return scores

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#format\t{MODEL_FORMAT}\n")
            fh.write(f"#ontology\t{json.dumps(list(self.ontology))}\n")
            fh.write(f"#config\t{json.dumps(self.config.to_json(), sort_keys=True)}\n")
            for feat in sorted(self.weights):
                row = self.weights[feat]
                for label in sorted(row):
                    fh.write(f"{feat}\t{label}\t{row[label]!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> TaggerModel:
        header: dict[str, str] = {}
        weights: dict[str, dict[str, float]] = defaultdict(dict)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if line.startswith("#"):
                    key, _, value = line[1:].partition("\t")
                    header[key] = value
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}: line {lineno}: expected feature<TAB>label<TAB>weight")
                weights[parts[0]][parts[1]] = float(parts[2])
        if header.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} model file")
        cfg = json.loads(header["config"])
        cfg["families"] = tuple(cfg["families"])
        return cls(dict(weights), tuple(json.loads(header["ontology"])), TaggerConfig(**cfg))


def predict(model: TaggerModel, sentence: SentenceLike) -> list[Prediction]:
    """Typed (non-NONE) token decisions with their score margins."""
    out = []
    for i, feats in enumerate(sentence_features(sentence, model.config)):
        ranked = _ranked(model.scores(feats))
        label, best = ranked[0]
        if label == NONE:
            continue
        margin = best - ranked[1][1] if len(ranked) > 1 else 0.0
        out.append(Prediction(i, label, margin))
    return out


def predict_examples(model: TaggerModel, doc_id: str, sentence_index: int, sentence: SentenceLike) -> list[TriggerExample]:
    return [
        TriggerExample(
            doc_id=doc_id,
            tokens=tuple(sentence.tokens),
            trigger_span=(p.token_index, p.token_index + 1),
            event_type=p.event_type,
            entities=tuple(sentence.entities),
            source=Source.PREDICTED,
            sentence_index=sentence_index,
        )
        for p in predict(model, sentence)
    ]


def _training_instances(examples: Sequence[TriggerExample], cfg: TaggerConfig) -> list[tuple[tuple[str, ...], str]]:
    # Merge examples that annotate the same sentence so every trigger in it is
    # positive and all remaining tokens are NONE.
    sentences: dict[tuple, tuple[TriggerExample, list[str]]] = {}
    for ex in examples:
        key = (ex.doc_id, ex.sentence_index, ex.tokens)
        if key not in sentences:
            sentences[key] = (ex, [NONE] * len(ex.tokens))
        labels = sentences[key][1]
        s, e = ex.trigger_span
        for k in range(s, e):
            labels[k] = ex.event_type
    instances = []
    for ex, labels in sentences.values():
        for feats, label in zip(sentence_features(ex, cfg), labels):
            instances.append((feats, label))
    return instances


def train(
    examples: Sequence[TriggerExample],
    epochs: int | None = None,
    seed: int | None = None,
    cfg: TaggerConfig | None = None,
    ontology: Sequence[str] | None = None,
) -> TaggerModel:
    """Averaged multiclass perceptron over every token of every example sentence.

    The instance order is shuffled each epoch with ``random.Random(seed)``,
    so a fixed (examples, seed, epochs) triple always gives the same weights.
    """
    cfg = cfg or TaggerConfig()
    if epochs is not None or seed is not None:
        cfg = TaggerConfig(
            window=cfg.window,
            epochs=cfg.epochs if epochs is None else epochs,
            seed=cfg.seed if seed is None else seed,
            families=cfg.families,
        )
    onto = tuple(sorted(set(ontology) if ontology is not None else {ex.event_type for ex in examples}))
    if not onto:
        raise ValueError("cannot train with an empty ontology")
    if NONE in onto:
        raise ValueError(f"{NONE!r} is reserved and cannot be an event type")
    if not any(ex.event_type in onto for ex in examples):
        raise ValueError("training needs at least one positive example")

    instances = _training_instances(examples, cfg)
    labels = (NONE,) + onto
    weights: dict[str, dict[str, float]] = defaultdict(dict)
    totals: dict[tuple[str, str], float] = defaultdict(float)
    stamps: dict[tuple[str, str], int] = defaultdict(int)
    step = 0

    def bump(feat: str, label: str, delta: float) -> None:
        row = weights[feat]
        key = (feat, label)
        w = row.get(label, 0.0)
        totals[key] += (step - stamps[key]) * w
        stamps[key] = step
        row[label] = w + delta

    rng = random.Random(cfg.seed)
    order = list(range(len(instances)))
    for _ in range(cfg.epochs):
        rng.shuffle(order)
        for idx in order:
            feats, gold = instances[idx]
            scores = dict.fromkeys(labels, 0.0)
            for f in feats:
                row = weights.get(f)
                if row:
                    for label, w in row.items():
                        scores[label] += w
            guess = _ranked(scores)[0][0]
            step += 1
            if guess != gold:
                for f in feats:
                    bump(f, gold, 1.0)
                    bump(f, guess, -1.0)

    averaged: dict[str, dict[str, float]] = {}
    for feat in sorted(weights):
        row = {}
        for label in sorted(weights[feat]):
            key = (feat, label)
            total = totals[key] + (step - stamps[key]) * weights[feat][label]
            avg = total / step
            if avg != 0.0:
                row[label] = avg
        if row:
            averaged[feat] = row
    return TaggerModel(averaged, onto, cfg)


def read_examples(path: str | Path) -> list[TriggerExample]:
    out = []
    for lineno, rec in read_jsonl(path):
        try:
            out.append(TriggerExample.from_json(rec))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: line {lineno}: bad trigger example ({exc})") from None
    return out
