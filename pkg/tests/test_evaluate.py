import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from eventboot.evaluate import EvalReport, paired_bootstrap, prf, score
from eventboot.tagger import TriggerExample

from builders import FIXTURES

TOKENS = tuple(f"t{i}" for i in range(8))
CASES = json.loads((FIXTURES / "scoring_cases.json").read_text())["cases"]


def ex(doc_id, si, span, etype):
    return TriggerExample(doc_id, TOKENS, tuple(span), etype, sentence_index=si)


def _load(rows):
    return [ex(*r) for r in rows]


@pytest.mark.parametrize("case", CASES, ids=[c["name"] for c in CASES])
def test_scoring_fixture(case):
    r = score(_load(case["pred"]), _load(case["gold"]), case.get("documents"))
    assert (r.true_positives, r.false_positives, r.false_negatives) == (case["tp"], case["fp"], case["fn"])
    assert r.precision == float(Fraction(case["p"]))
    assert r.recall == float(Fraction(case["r"]))
    assert r.f1 == pytest.approx(float(Fraction(case["f1"])), abs=1e-15)
    assert r.duplicates_dropped == case.get("duplicates", 0)
    for etype, cell in case.get("per_type", {}).items():
        c = r.per_type[etype]
        assert [c.true_positives, c.false_positives, c.false_negatives] == cell


def test_unknown_document_is_rejected():
    with pytest.raises(ValueError, match="ghost"):
        score([ex("ghost", 0, (1, 2), "Attack")], [ex("a", 0, (1, 2), "Attack")])


def test_prf_zero_denominators():
    assert prf(0, 0, 0) == (0.0, 0.0, 0.0)
    assert prf(3, 0, 1) == (1.0, 0.75, pytest.approx(6 / 7))


trigger = st.tuples(st.sampled_from("abc"), st.integers(0, 2), st.integers(0, 5), st.sampled_from(["A", "B"]))


@settings(max_examples=60)
@given(st.lists(trigger, max_size=12), st.lists(trigger, max_size=12))
def test_counts_are_consistent(preds, gold):
    P = [ex(d, s, (i, i + 1), t) for d, s, i, t in preds]
    G = [ex(d, s, (i, i + 1), t) for d, s, i, t in gold]
    r = score(P, G, documents="abc")
    assert r.true_positives + r.false_positives == len(set(p.key for p in P))
    assert r.true_positives + r.false_negatives == len(G)
    assert sum(c.true_positives for c in r.per_type.values()) == r.true_positives
    assert 0.0 <= r.f1 <= 1.0
    # order of predictions never matters
    assert score(list(reversed(P)), G, documents="abc").to_json() == r.to_json()


def test_report_table_and_json():
    case = CASES[1]
    r = score(_load(case["pred"]), _load(case["gold"]))
    table = r.to_table()
    assert table.splitlines()[-1].split()[:4] == ["MICRO", "0.5000", "0.4000", "0.4444"]
    assert set(r.to_json()["per_type"]) == {"Attack", "Die", "Elect", "Meet"}
    assert isinstance(r, EvalReport)


def test_paired_bootstrap_detects_a_clear_gain():
    gold = [ex(f"d{i}", 0, (1, 2), "A") for i in range(40)]
    weak = gold[:10]
    strong = gold[:35]
    sig = paired_bootstrap(weak, strong, gold, resamples=2000, seed=1)
    assert sig["f1_delta"] == pytest.approx(prf(35, 0, 5)[2] - prf(10, 0, 30)[2])
    assert sig["p_value"] < 0.01
    same = paired_bootstrap(strong, strong, gold, resamples=500)
    assert same["f1_delta"] == 0.0 and same["p_value"] == 1.0


def test_paired_bootstrap_seeded():
    gold = [ex(f"d{i}", 0, (1, 2), "A") for i in range(30)]
    a, b = gold[::2], gold[::3]
    assert paired_bootstrap(a, b, gold, resamples=300, seed=4) == paired_bootstrap(a, b, gold, resamples=300, seed=4)
