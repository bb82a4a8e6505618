"""Dated, entity-annotated news documents and the entity count tables.

Documents arrive as JSONL records (one document per line). Ingestion is a
single pass that builds the per-date document groups and the mention-level
entity counts used by the pair score in :mod:`eventboot.spike_cluster`.
"""

from __future__ import annotations

import json
import sys
import unicodedata
from array import array
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence


class CorpusError(ValueError):
    """Raised for malformed or inconsistent document records."""


def canonicalize(surface: str) -> str:
    """Case-fold and collapse internal whitespace."""
    return " ".join(surface.casefold().split())


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> tuple[list[str], list[tuple[int, int]]]:
    """Split ``text`` into tokens with their character offsets.

    Whitespace separates chunks; leading and trailing punctuation characters
    of a chunk become single-character tokens. Interior punctuation stays,
    and a chunk such as ``U.S.`` keeps its final period because the core
    already contains one.
    """
    tokens: list[str] = []
    offsets: list[tuple[int, int]] = []
    n = len(text)
    i = 0
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        lo, hi = i, j
        while lo < hi and _is_punct(text[lo]):
            lo += 1
        if lo == hi:
            # chunk is all punctuation, e.g. "..." or "--"
            tokens.append(text[i:j])
            offsets.append((i, j))
            i = j
            continue
        while hi > lo and _is_punct(text[hi - 1]):
            hi -= 1
        if hi < j and text[hi] == "." and "." in text[lo:hi]:
            hi += 1
        for k in range(i, lo):
            tokens.append(text[k])
            offsets.append((k, k + 1))
        tokens.append(text[lo:hi])
        offsets.append((lo, hi))
        for k in range(hi, j):
            tokens.append(text[k])
            offsets.append((k, k + 1))
        i = j
    return tokens, offsets


def align_tokens(text: str, tokens: Sequence[str]) -> list[tuple[int, int]]:
    """Locate pre-tokenized ``tokens`` in ``text`` left to right."""
    offsets = []
    cursor = 0
    for tok in tokens:
        start = text.find(tok, cursor)
        if start < 0:
            raise CorpusError(f"token {tok!r} not found in sentence text after offset {cursor}")
        end = start + len(tok)
        offsets.append((start, end))
        cursor = end
    return offsets


def parse_date(value: str) -> date:
    """Parse an ISO-8601 date, truncating any time component to the day."""
    if not isinstance(value, str):
        raise ValueError(f"date must be a string, got {type(value).__name__}")
    if len(value) == 10:
        return date.fromisoformat(value)
    text = value[:-1] + "+00:00" if value.endswith("Z") else value
    return datetime.fromisoformat(text).date()


@dataclass(frozen=True)
class EntityMention:
    surface: str
    canonical: str
    ner_type: str
    token_span: tuple[int, int]

    @classmethod
    def from_surface(cls, surface: str, ner_type: str, token_span: Sequence[int]) -> EntityMention:
        return cls(surface, sys.intern(canonicalize(surface)), sys.intern(ner_type), (int(token_span[0]), int(token_span[1])))

    def to_json(self) -> dict[str, Any]:
        return {"surface": self.surface, "type": self.ner_type, "token_span": list(self.token_span)}


class Sentence:
    """One tokenized sentence.

    Offsets are kept in a flat integer array; ``char_offsets`` materializes
    the (start, end) pairs on access.
    """

    __slots__ = ("text", "tokens", "entities", "pos", "lemmas", "_offsets")

    def __init__(
        self,
        text: str,
        tokens: Sequence[str] | None = None,
        entities: Sequence[EntityMention] = (),
        pos: Sequence[str] | None = None,
        lemmas: Sequence[str] | None = None,
    ) -> None:
        if tokens is None:
            toks, offsets = tokenize(text)
        else:
            toks = list(tokens)
            offsets = align_tokens(text, toks)
        self.text = text
        self.tokens = tuple(sys.intern(t) for t in toks)
        self._offsets = array("I", [x for pair in offsets for x in pair])
        self.entities = tuple(entities)
        self.pos = tuple(pos) if pos is not None else None
        self.lemmas = tuple(lemmas) if lemmas is not None else None
        n = len(self.tokens)
        for ent in self.entities:
            s, e = ent.token_span
            if not (0 <= s < e <= n):
                raise CorpusError(f"entity {ent.surface!r} span {ent.token_span} outside [0, {n})")
        for name, extra in (("pos", self.pos), ("lemma", self.lemmas)):
            if extra is not None and len(extra) != n:
                raise CorpusError(f"{name} array has {len(extra)} entries for {n} tokens")

    @property
    def char_offsets(self) -> list[tuple[int, int]]:
        o = self._offsets
        return [(o[k], o[k + 1]) for k in range(0, len(o), 2)]

    def __len__(self) -> int:
        return len(self.tokens)

    def __repr__(self) -> str:
        return f"Sentence({' '.join(self.tokens)!r})"

    def to_json(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"text": self.text, "tokens": list(self.tokens), "entities": [e.to_json() for e in self.entities]}
        if self.pos is not None:
            rec["pos"] = list(self.pos)
        if self.lemmas is not None:
            rec["lemma"] = list(self.lemmas)
        return rec


@dataclass(frozen=True)
class Document:
    doc_id: str
    date: date
    title: str
    sentences: tuple[Sentence, ...]
    entity_keys: frozenset[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        keys = frozenset(e.canonical for s in self.sentences for e in s.entities)
        object.__setattr__(self, "entity_keys", keys)

    def to_json(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "date": self.date.isoformat(),
            "title": self.title,
            "sentences": [s.to_json() for s in self.sentences],
        }


def entity_set(doc: Document) -> frozenset[str]:
    """Distinct canonical entity keys mentioned anywhere in ``doc``."""
    return doc.entity_keys


@dataclass
class EntityCounts:
    """Mention-level counts per (entity, date) and per entity."""

    by_date: dict[tuple[str, date], int] = field(default_factory=dict)
    by_corpus: dict[str, int] = field(default_factory=dict)
    total_mentions: int = 0

    def add_document(self, doc: Document) -> None:
        day = doc.date
        by_date, by_corpus = self.by_date, self.by_corpus
        for sent in doc.sentences:
            for ent in sent.entities:
                key = (ent.canonical, day)
                by_date[key] = by_date.get(key, 0) + 1
                by_corpus[ent.canonical] = by_corpus.get(ent.canonical, 0) + 1
                self.total_mentions += 1

    def merge(self, other: EntityCounts) -> None:
        for key, n in other.by_date.items():
            self.by_date[key] = self.by_date.get(key, 0) + n
        for key, n in other.by_corpus.items():
            self.by_corpus[key] = self.by_corpus.get(key, 0) + n
        self.total_mentions += other.total_mentions

    def date_count(self, entity: str, day: date) -> int:
        return self.by_date.get((entity, day), 0)

    def corpus_count(self, entity: str) -> int:
        return self.by_corpus.get(entity, 0)

    def to_records(self) -> list[dict[str, Any]]:
        rows = sorted(self.by_date.items(), key=lambda kv: (kv[0][0], kv[0][1]))
        return [
            {"entity": ent, "date": day.isoformat(), "count": n, "corpus_count": self.by_corpus[ent]}
            for (ent, day), n in rows
        ]


class Gazetteer:
    """Exact longest-match entity annotator over token sequences."""

    def __init__(self, entries: Mapping[str, str]) -> None:
        self._entries: dict[tuple[str, ...], str] = {}
        self._max_len = 0
        for surface, ner_type in entries.items():
            toks = tuple(tokenize(surface)[0])
            if toks:
                self._entries[toks] = ner_type
                self._max_len = max(self._max_len, len(toks))

    @classmethod
    def from_file(cls, path: str | Path) -> Gazetteer:
        """Read ``surface<TAB>type`` lines."""
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                surface, _, ner_type = line.partition("\t")
                entries[surface] = ner_type or "MISC"
        return cls(entries)

    def annotate(self, tokens: Sequence[str]) -> list[EntityMention]:
        found = []
        i, n = 0, len(tokens)
        while i < n:
            for length in range(min(self._max_len, n - i), 0, -1):
                span = tuple(tokens[i : i + length])
                ner_type = self._entries.get(span)
                if ner_type is not None:
                    found.append(EntityMention.from_surface(" ".join(span), ner_type, (i, i + length)))
                    i += length
                    break
            else:
                i += 1
        return found


def _field(rec: Mapping[str, Any], name: str, kind: type, lineno: int) -> Any:
    if name not in rec:
        raise CorpusError(f"line {lineno}: missing field {name!r}")
    value = rec[name]
    if not isinstance(value, kind):
        raise CorpusError(f"line {lineno}: field {name!r} must be {kind.__name__}")
    return value


def parse_document(rec: Mapping[str, Any], lineno: int = 0, gazetteer: Gazetteer | None = None) -> Document:
    """Build a :class:`Document` from one decoded JSONL record."""
    if not isinstance(rec, Mapping):
        raise CorpusError(f"line {lineno}: record must be a JSON object")
    doc_id = _field(rec, "doc_id", str, lineno)
    raw_date = _field(rec, "date", str, lineno)
    try:
        day = parse_date(raw_date)
    except ValueError as exc:
        raise CorpusError(f"line {lineno}: field 'date' is not a valid day: {raw_date!r} ({exc})") from None
    title = rec.get("title", "")
    if not isinstance(title, str):
        raise CorpusError(f"line {lineno}: field 'title' must be str")
    sentences = []
    for k, srec in enumerate(_field(rec, "sentences", list, lineno)):
        where = f"sentences[{k}]"
        if not isinstance(srec, Mapping):
            raise CorpusError(f"line {lineno}: field {where!r} must be an object")
        text = srec.get("text")
        if not isinstance(text, str):
            raise CorpusError(f"line {lineno}: field '{where}.text' must be str")
        tokens = srec.get("tokens")
        if tokens is not None and not (isinstance(tokens, list) and all(isinstance(t, str) for t in tokens)):
            raise CorpusError(f"line {lineno}: field '{where}.tokens' must be a list of str")
        try:
            if "entities" in srec:
                entities = []
                for j, erec in enumerate(srec["entities"]):
                    try:
                        entities.append(EntityMention.from_surface(erec["surface"], erec["type"], erec["token_span"]))
                    except (KeyError, TypeError, IndexError, ValueError):
                        raise CorpusError(f"field '{where}.entities[{j}]' is malformed") from None
                sent = Sentence(text, tokens, entities, srec.get("pos"), srec.get("lemma"))
            else:
                sent = Sentence(text, tokens, (), srec.get("pos"), srec.get("lemma"))
                if gazetteer is not None:
                    sent.entities = tuple(gazetteer.annotate(sent.tokens))
        except CorpusError as exc:
            raise CorpusError(f"line {lineno}: {where}: {exc}") from None
        sentences.append(sent)
    return Document(doc_id, day, title, tuple(sentences))


class CorpusHandle:
    """Immutable view of an ingested corpus."""

    def __init__(self, documents: dict[str, Document], counts: EntityCounts) -> None:
        self.documents = documents
        self.counts = counts
        groups: dict[date, list[str]] = defaultdict(list)
        for doc in documents.values():
            groups[doc.date].append(doc.doc_id)
        self.by_date: dict[date, tuple[str, ...]] = {d: tuple(sorted(ids)) for d, ids in sorted(groups.items())}

    @property
    def dates(self) -> list[date]:
        return list(self.by_date)

    def __len__(self) -> int:
        return len(self.documents)

    def __getitem__(self, doc_id: str) -> Document:
        return self.documents[doc_id]

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self.documents

    def docs_on(self, day: date) -> list[Document]:
        return [self.documents[i] for i in self.by_date.get(day, ())]

    @property
    def n_sentences(self) -> int:
        return sum(len(d.sentences) for d in self.documents.values())


def _decode_lines(stream: Iterable[str | Mapping[str, Any]]) -> Iterator[tuple[int, Any]]:
    for lineno, item in enumerate(stream, start=1):
        if isinstance(item, (str, bytes)):
            if not item.strip():
                continue
            try:
                yield lineno, json.loads(item)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        else:
            yield lineno, item


def ingest(stream: Iterable[str | Mapping[str, Any]], gazetteer: Gazetteer | None = None) -> CorpusHandle:
    """Ingest JSONL lines (or already-decoded records) into a corpus.

    Raises :class:`CorpusError` naming the line for malformed records and
    for duplicate ``doc_id`` values.
    """
    documents: dict[str, Document] = {}
    counts = EntityCounts()
    for lineno, rec in _decode_lines(stream):
        doc = parse_document(rec, lineno, gazetteer)
        if doc.doc_id in documents:
            raise CorpusError(f"line {lineno}: duplicate doc_id {doc.doc_id!r}")
        documents[doc.doc_id] = doc
        counts.add_document(doc)
    return CorpusHandle(documents, counts)


def read_corpus(path: str | Path, gazetteer: Gazetteer | None = None) -> CorpusHandle:
    with open(path, encoding="utf-8") as fh:
        return ingest(fh, gazetteer)


def write_jsonl(path: str | Path, records: Iterable[Mapping[str, Any]]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    yield lineno, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None

