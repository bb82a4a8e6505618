"""Pretrained token vectors, cosine similarity and per-type trigger centroids."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .tagger import TriggerExample

log = logging.getLogger(__name__)


class EmbeddingError(ValueError):
    pass


class EmbeddingTable:
    """Immutable token -> vector map backed by one float64 matrix."""

    def __init__(self, tokens: Sequence[str], matrix: np.ndarray) -> None:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(tokens):
            raise EmbeddingError(f"matrix shape {matrix.shape} does not match {len(tokens)} tokens")
        if matrix.shape[1] < 1:
            raise EmbeddingError("dim must be > 0")
        self.dim = int(matrix.shape[1])
        self.tokens = list(tokens)
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def row(self, token: str) -> int | None:
        i = self.index.get(token)
        if i is None:
            i = self.index.get(token.casefold())
        return i

    def __contains__(self, token: object) -> bool:
        return isinstance(token, str) and self.row(token) is not None

    def get(self, token: str) -> np.ndarray | None:
        """Vector for ``token``: exact form first, then its case-folded form."""
        i = self.row(token)
        return None if i is None else self.matrix[i]

    def __getitem__(self, token: str) -> np.ndarray:
        v = self.get(token)
        if v is None:
            raise KeyError(token)
        return v


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read the text vector format: a ``<vocab_size> <dim>`` header line,
    then ``<token> <f1> ... <f_dim>`` per line."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"embedding file not found: {path}")
    tokens: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}: line 1: expected '<vocab_size> <dim>' header")
        try:
            vocab_size, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingError(f"{path}: line 1: header values must be integers") from None
        if dim < 1:
            raise EmbeddingError(f"{path}: line 1: dim must be > 0")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if parts == [""]:
                continue
            if len(parts) != dim + 1:
                raise EmbeddingError(f"{path}: line {lineno}: expected {dim} values for {parts[0]!r}, got {len(parts) - 1}")
            tok = parts[0]
            if tok in seen:
                raise EmbeddingError(f"{path}: line {lineno}: duplicate token {tok!r}")
            try:
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise EmbeddingError(f"{path}: line {lineno}: non-numeric value for {tok!r}") from None
            seen.add(tok)
            tokens.append(tok)
    if len(tokens) != vocab_size:
        raise EmbeddingError(f"{path}: header declares {vocab_size} vectors, file has {len(tokens)}")
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return EmbeddingTable(tokens, matrix)


def write_embeddings(path: str | Path, table: EmbeddingTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for tok, row in zip(table.tokens, table.matrix):
            fh.write(tok + " " + " ".join(repr(float(x)) for x in row) + "\n")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0.0 if either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return max(-1.0, min(1.0, float(np.dot(u, v)) / (nu * nv)))


@dataclass(frozen=True)
class CanonicalVector:
    event_type: str
    vector: np.ndarray
    support: int


def trigger_vector(tokens: Iterable[str], table: EmbeddingTable) -> np.ndarray | None:
    """Mean vector of the in-vocabulary tokens of one trigger, or None."""
    vecs = [v for v in (table.get(t) for t in tokens) if v is not None]
    if not vecs:
        return None
    acc = np.zeros(table.dim)
    for v in vecs:
        acc = acc + v
    return acc / len(vecs)


def canonical_vectors(
    gold: Sequence[TriggerExample],
    table: EmbeddingTable,
    warnings: list[str] | None = None,
) -> dict[str, CanonicalVector]:
    """Average the embeddings of each event type's distinct gold triggers.

    Triggers are deduplicated by case-folded text and summed in sorted
    order, so the result does not depend on the order of ``gold``. Event
    types with no in-vocabulary trigger are left out and reported through
    ``warnings`` and the log.
    """
    if not gold:
        raise ValueError("canonical_vectors needs at least one gold example")
    triggers: dict[str, set[tuple[str, ...]]] = {}
    for ex in gold:
        s, e = ex.trigger_span
        triggers.setdefault(ex.event_type, set()).add(tuple(t.casefold() for t in ex.tokens[s:e]))

    out: dict[str, CanonicalVector] = {}
    for etype in sorted(triggers):
        acc = np.zeros(table.dim)
        support = 0
        oov: list[str] = []
        for trig in sorted(triggers[etype]):
            v = trigger_vector(trig, table)
            if v is None:
                oov.append(" ".join(trig))
                continue
            acc = acc + v
            support += 1
        if support == 0:
            msg = f"event type {etype!r}: all {len(triggers[etype])} gold triggers are out of vocabulary"
            log.warning(msg)
            if warnings is not None:
                warnings.append(msg)
            continue
        if oov:
            log.warning("event type %r: skipped %d out-of-vocabulary gold triggers: %s",
                        etype, len(oov), ", ".join(oov[:10]) + (" ..." if len(oov) > 10 else ""))
        vec = acc / support
        vec.setflags(write=False)
        out[etype] = CanonicalVector(etype, vec, support)
    return out
