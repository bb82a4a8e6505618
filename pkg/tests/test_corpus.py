import json
import random
from datetime import date

import pytest
from hypothesis import given, settings, strategies as st

from eventboot.corpus import (
    CorpusError,
    EntityCounts,
    Gazetteer,
    entity_set,
    ingest,
    read_corpus,
    tokenize,
)

from builders import FIXTURES, corpus_of, doc, sent
import oracles


def test_empty_stream():
    c = ingest([])
    assert len(c) == 0
    assert c.counts.by_date == {} and c.counts.by_corpus == {}
    assert c.counts.total_mentions == 0


def test_repeated_mention_counts_twice():
    c = corpus_of(doc("a", "2016-09-25", {
        "text": "Les Miles out ; Les Miles gone .",
        "entities": [{"surface": "Les Miles", "type": "PER", "token_span": [0, 2]},
                     {"surface": "Les Miles", "type": "PER", "token_span": [4, 6]}],
    }))
    d = date(2016, 9, 25)
    assert c.counts.by_date[("les miles", d)] == 2
    assert c.counts.by_corpus["les miles"] == 2


def test_mini_fixture_matches_hand_tally():
    expected = json.loads((FIXTURES / "mini_counts.json").read_text())
    c = read_corpus(FIXTURES / "mini.jsonl")
    got = [[r["entity"], r["date"], r["count"]] for r in c.counts.to_records()]
    assert got == expected["by_date"]
    assert c.counts.by_corpus == expected["by_corpus"]
    assert c.counts.total_mentions == expected["total_mentions"]
    assert {d: sorted(entity_set(x)) for d, x in c.documents.items()} == expected["entity_sets"]


def test_time_component_truncated_to_day():
    c = read_corpus(FIXTURES / "mini.jsonl")
    assert c["lsu-3"].date == date(2016, 9, 26)
    assert c.by_date[date(2016, 9, 25)] == ("lsu-1", "lsu-2")


def test_entity_set_cases():
    c = corpus_of(
        doc("none", "2020-01-01", sent("Nothing here .")),
        doc("lsu", "2020-01-01", sent("LSU won .", ("LSU", "ORG")), sent("LSU lost .", ("LSU", "ORG")),
            sent("LSU tied .", ("LSU", "ORG"))),
        doc("mixed", "2020-01-01", sent("LSU and Les Miles and lsu .", ("LSU", "ORG"), ("Les Miles", "PER"), ("lsu", "ORG"))),
    )
    assert entity_set(c["none"]) == frozenset()
    assert entity_set(c["lsu"]) == {"lsu"}
    assert entity_set(c["mixed"]) == {"lsu", "les miles"}


@pytest.mark.parametrize("text,tokens,offsets", [
    ("", [], []),
    ("LSU fires Miles.", ["LSU", "fires", "Miles", "."], [(0, 3), (4, 9), (10, 15), (15, 16)]),
    ("U.S.", ["U.S."], [(0, 4)]),
    ('"Hi," she said', ['"', "Hi", ",", '"', "she", "said"], [(0, 1), (1, 3), (3, 4), (4, 5), (6, 9), (10, 14)]),
    ("wait ...", ["wait", "..."], [(0, 4), (5, 8)]),
])
def test_tokenize_examples(text, tokens, offsets):
    assert tokenize(text) == (tokens, offsets)


@given(st.text(alphabet=st.sampled_from("ab.,;!? \t\n'\"U-S"), max_size=40))
def test_tokens_are_the_text_at_their_offsets(text):
    tokens, offsets = tokenize(text)
    assert [text[s:e] for s, e in offsets] == tokens
    assert all(a[1] <= b[0] for a, b in zip(offsets, offsets[1:]))
    # nothing but whitespace is dropped
    covered = set()
    for s, e in offsets:
        covered.update(range(s, e))
    assert all(text[i].isspace() for i in range(len(text)) if i not in covered)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_ingest_is_permutation_invariant(seed, rnd):
    recs = oracles.random_corpus(seed, n_docs=30)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    a, b = ingest(recs), ingest(shuffled)
    assert a.counts == b.counts
    assert a.by_date == b.by_date


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_counts_match_oracle_tally(seed):
    recs = oracles.random_corpus(seed, n_docs=40)
    c = ingest(recs)
    by_date, by_corpus = oracles.tally(recs)
    assert {(e, d.isoformat()): n for (e, d), n in c.counts.by_date.items()} == by_date
    assert c.counts.by_corpus == by_corpus


def test_merge_equals_single_pass():
    recs = oracles.random_corpus(3, n_docs=50)
    whole = ingest(recs).counts
    left, right = ingest(recs[:20]).counts, ingest(recs[20:]).counts
    left.merge(right)
    assert left == whole


def test_ingest_accepts_json_lines():
    lines = (FIXTURES / "mini.jsonl").read_text().splitlines()
    assert ingest(lines).counts == read_corpus(FIXTURES / "mini.jsonl").counts


@pytest.mark.parametrize("rec,needle", [
    ({"date": "2020-01-01", "sentences": []}, "doc_id"),
    ({"doc_id": "a", "date": "01/02/2020", "sentences": []}, "date"),
    ({"doc_id": "a", "date": "2020-01-01", "sentences": [{"text": "x", "entities": [{"surface": "x"}]}]}, "entities[0]"),
    ({"doc_id": "a", "date": "2020-01-01", "sentences": [{"text": "a b", "entities": [
        {"surface": "b", "type": "ORG", "token_span": [1, 5]}]}]}, "sentences[0]"),
])
def test_malformed_records_name_line_and_field(rec, needle):
    with pytest.raises(CorpusError) as err:
        ingest([json.dumps({"doc_id": "ok", "date": "2020-01-01", "sentences": []}), json.dumps(rec)])
    assert "line 2" in str(err.value)
    assert needle in str(err.value)


def test_invalid_json_and_duplicate_ids():
    with pytest.raises(CorpusError, match="line 1"):
        ingest(["{not json"])
    r = doc("a", "2020-01-01", sent("x ."))
    with pytest.raises(CorpusError, match="duplicate"):
        ingest([r, r])


def test_gazetteer_longest_match():
    gz = Gazetteer({"Les Miles": "PER", "Les": "PER", "LSU": "ORG"})
    c = ingest([{"doc_id": "a", "date": "2020-01-01", "sentences": [{"text": "LSU fires Les Miles ."}]}], gazetteer=gz)
    ents = c["a"].sentences[0].entities
    assert [(e.canonical, e.token_span) for e in ents] == [("lsu", (0, 1)), ("les miles", (2, 4))]


def test_gazetteer_file(tmp_path):
    p = tmp_path / "gaz.tsv"
    p.write_text("Les Miles\tPER\nLSU\tORG\n")
    gz = Gazetteer.from_file(p)
    assert [e.ner_type for e in gz.annotate(["LSU", "and", "Les", "Miles"])] == ["ORG", "PER"]


def test_document_json_round_trip():
    c = read_corpus(FIXTURES / "mini.jsonl")
    again = ingest([d.to_json() for d in c.documents.values()])
    assert again.counts == c.counts
    assert [s.tokens for s in again["lsu-2"].sentences] == [s.tokens for s in c["lsu-2"].sentences]


def test_counts_records_sorted_and_stable():
    recs = oracles.random_corpus(9, n_docs=60)
    a = ingest(recs).counts.to_records()
    random.Random(1).shuffle(recs)
    assert ingest(recs).counts.to_records() == a
    assert [(r["entity"], r["date"]) for r in a] == sorted((r["entity"], r["date"]) for r in a)


def test_entity_counts_accessors():
    c = read_corpus(FIXTURES / "mini.jsonl").counts
    assert isinstance(c, EntityCounts)
    assert c.date_count("lsu", date(2016, 9, 25)) == 3
    assert c.date_count("lsu", date(2001, 1, 1)) == 0
    assert c.corpus_count("nobody") == 0
