import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from eventboot.embeddings import (
    EmbeddingError,
    EmbeddingTable,
    canonical_vectors,
    cosine,
    load_embeddings,
    trigger_vector,
    write_embeddings,
)
from eventboot.tagger import TriggerExample

from builders import FIXTURES


def _write(tmp_path, text):
    p = tmp_path / "vec.txt"
    p.write_text(text)
    return p


def test_small_table(tmp_path):
    t = load_embeddings(_write(tmp_path, "2 3\ncat 1 0 0\ndog 0 1 0\n"))
    assert len(t) == 2 and t.dim == 3
    assert t["dog"].tolist() == [0.0, 1.0, 0.0]


@pytest.mark.parametrize("text,needle", [
    ("2 3\ncat 1 0 0\nbad 1 2\n", "line 3"),
    ("2 3\ncat 1 0 0\n", "2"),
    ("2 3\ncat 1 0 0\ncat 0 1 0\n", "line 3"),
    ("two 3\ncat 1 0 0\n", "line 1"),
    ("1 3\ncat 1 x 0\n", "line 2"),
])
def test_malformed_tables(tmp_path, text, needle):
    with pytest.raises(EmbeddingError, match=needle):
        load_embeddings(_write(tmp_path, text))


def test_fifty_vector_fixture_round_trips_exact_values():
    path = FIXTURES / "vectors50.txt"
    t = load_embeddings(path)
    rows = [line.split() for line in path.read_text().splitlines()[1:]]
    assert len(t) == 50
    for tok, *vals in rows:
        assert t[tok].tolist() == [float(v) for v in vals]


def test_write_then_load_is_identical(tmp_path):
    t = load_embeddings(FIXTURES / "vectors50.txt")
    out = tmp_path / "again.txt"
    write_embeddings(out, t)
    again = load_embeddings(out)
    assert again.tokens == t.tokens
    assert np.array_equal(again.matrix, t.matrix)


def test_lookup_falls_back_to_casefold():
    t = EmbeddingTable(["fire", "Paris"], np.eye(2))
    assert "FIRE" in t and t.get("Fire") is not None
    assert "Paris" in t and "nope" not in t
    assert t.get("nope") is None
    with pytest.raises(KeyError):
        t["nope"]


def test_matrix_is_read_only():
    t = EmbeddingTable(["a"], np.ones((1, 2)))
    with pytest.raises(ValueError):
        t.matrix[0, 0] = 5


@pytest.mark.parametrize("u,v,want", [
    ((1.0, 2.0), (1.0, 2.0), 1.0),
    ((1.0, 0.0), (0.0, 1.0), 0.0),
    ((1.0, 2.0), (2.0, 1.0), 0.8),
    ((0.0, 0.0), (1.0, 1.0), 0.0),
    ((1.0, 0.0), (-3.0, 0.0), -1.0),
])
def test_cosine_examples(u, v, want):
    assert cosine(np.array(u), np.array(v)) == pytest.approx(want, abs=1e-12)


finite = arrays(np.float64, 5, elements=st.floats(-100, 100, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-3))


@given(finite, finite, st.floats(0.01, 1000))
def test_cosine_scale_invariant_and_bounded(u, v, k):
    c = cosine(u, v)
    assert -1.0 <= c <= 1.0
    assert cosine(u * k, v) == pytest.approx(c, abs=1e-9)
    assert cosine(u, v) == pytest.approx(cosine(v, u), abs=1e-12)


def _gold(*pairs):
    return [TriggerExample(f"g{i}", (w, "."), (0, 1), etype) for i, (w, etype) in enumerate(pairs)]


def test_canonical_single_trigger():
    t = EmbeddingTable(["fire"], np.array([[0.3, -0.7]]))
    canon = canonical_vectors(_gold(("fire", "End-Position")), t)
    assert canon["End-Position"].vector.tolist() == [0.3, -0.7]
    assert canon["End-Position"].support == 1


def test_canonical_mean_of_two():
    t = EmbeddingTable(["a", "b"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    canon = canonical_vectors(_gold(("a", "X"), ("b", "X")), t)
    assert canon["X"].vector.tolist() == [0.5, 0.5]
    assert canon["X"].support == 2


def test_canonical_skips_oov_with_warning(caplog):
    t = EmbeddingTable(["fire"], np.array([[2.0, 1.0]]))
    warnings = []
    with caplog.at_level(logging.WARNING):
        canon = canonical_vectors(_gold(("fire", "E"), ("zzqx", "E")), t, warnings)
    assert canon["E"].vector.tolist() == [2.0, 1.0] and canon["E"].support == 1
    assert "zzqx" in caplog.text


def test_type_with_no_vectors_is_absent():
    t = EmbeddingTable(["fire"], np.array([[2.0, 1.0]]))
    warnings = []
    canon = canonical_vectors(_gold(("zzqx", "E")), t, warnings)
    assert "E" not in canon and warnings


def test_canonical_repeated_trigger_counts_once_and_order_free():
    t = load_embeddings(FIXTURES / "vectors50.txt")
    gold = _gold(("w03", "A"), ("w17", "A"), ("W03", "A"), ("w41", "A"), ("w08", "B"))
    a = canonical_vectors(gold, t)
    b = canonical_vectors(list(reversed(gold)), t)
    assert a["A"].support == 3
    assert a["A"].vector.tobytes() == b["A"].vector.tobytes()
    want = (t["w03"] + t["w17"] + t["w41"]) / 3
    assert np.allclose(a["A"].vector, want, atol=1e-9)


def test_multi_token_trigger_vector_is_mean():
    t = EmbeddingTable(["set", "fire"], np.array([[1.0, 0.0], [0.0, 3.0]]))
    assert trigger_vector(["set", "fire"], t).tolist() == [0.5, 1.5]
    assert trigger_vector(["nope"], t) is None
