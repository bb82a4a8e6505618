from collections import Counter
from itertools import combinations

import pytest

from eventboot.corpus import ingest
from eventboot.embeddings import canonical_vectors, cosine
from eventboot.spike_cluster import ClusterConfig, cluster_corpus
from eventboot.synth import SynthSpec, generate


def test_default_spec_arithmetic(default_synth):
    sc = default_synth
    spec = sc.spec
    per_type = spec.n_days * spec.clusters_per_day
    truth = sc.truth["clusters"]
    assert len(truth) == spec.n_event_types * per_type == 600
    n_gold = round(spec.gold_fraction * per_type)
    n_test = round(spec.test_fraction * per_type)
    splits = Counter((c["event_type"], c["split"]) for c in truth)
    for t in spec.event_types:
        assert splits[t, "gold"] == n_gold == 24
        assert splits[t, "test"] == n_test == 24
        assert splits[t, "news"] == per_type - n_gold - n_test
    # gold keeps only the easy paraphrases of gold clusters; test keeps all
    gold = Counter(ex.event_type for ex in sc.gold)
    test = Counter(ex.event_type for ex in sc.test)
    assert gold == {t: n_gold * spec.easy_paraphrases for t in spec.event_types}
    assert test == {t: n_test * spec.paraphrases_per_cluster for t in spec.event_types}
    distractors = spec.n_days * spec.distractor_docs_per_day
    n_docs = spec.n_event_types * (per_type - n_test) * spec.paraphrases_per_cluster + distractors
    assert len(sc.documents) == n_docs
    assert len(sc.heldout) == spec.n_event_types * n_test * spec.paraphrases_per_cluster


def test_gold_triggers_are_easy_tier(default_synth):
    easy = {w for entries in default_synth.lexicon.values() for w, tier in entries if tier == "easy"}
    assert {ex.trigger for ex in default_synth.gold} <= easy


def test_test_split_held_out_of_corpus(default_synth):
    corpus_ids = {d["doc_id"] for d in default_synth.documents}
    assert not corpus_ids & {d["doc_id"] for d in default_synth.heldout}
    assert {ex.doc_id for ex in default_synth.test} <= {d["doc_id"] for d in default_synth.heldout}


def test_planted_positions_point_at_trigger_words(default_synth):
    docs = {d["doc_id"]: d for d in default_synth.documents + default_synth.heldout}
    c = ingest(docs.values())
    for cl in default_synth.truth["clusters"][:50]:
        for doc_id, si, ti, word, _tier in cl["triggers"]:
            assert c[doc_id].sentences[si].tokens[ti] == word


def test_no_clusters_only_distractors():
    sc = generate(SynthSpec(clusters_per_day=0, n_days=3))
    assert sc.gold == [] and sc.truth["clusters"] == []
    assert all("-x" in d["doc_id"] for d in sc.documents)
    assert len(sc.documents) == 3 * SynthSpec().distractor_docs_per_day


def test_same_seed_byte_identical(tmp_path):
    spec = SynthSpec(n_days=4, seed=7)
    a = generate(spec).write(tmp_path / "a")
    b = generate(spec).write(tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes(), key
    c = generate(SynthSpec(n_days=4, seed=8)).write(tmp_path / "c")
    assert c["documents"].read_bytes() != a["documents"].read_bytes()


def test_embedding_tiers(default_synth):
    sc = default_synth
    canon = canonical_vectors(sc.gold, sc.embeddings)
    for t, entries in sc.lexicon.items():
        sims = {tier: [cosine(sc.embeddings[w], canon[t].vector) for w, ti in entries if ti == tier]
                for tier in ("easy", "hard")}
        assert min(sims["easy"]) > max(sims["hard"])
        assert min(sims["hard"]) > 0.4
        for other in sc.lexicon:
            if other != t:
                assert max(cosine(sc.embeddings[w], canon[other].vector) for w, _ in entries) < 0.4


def test_planted_clusters_are_recovered(default_synth):
    sc = default_synth
    run = cluster_corpus(ingest(sc.documents), ClusterConfig())
    owner = {d: cl.cluster_id for cl in run.clusters for d in cl.doc_ids}
    pairs = hit = 0
    for cl in sc.truth["clusters"]:
        if cl["split"] == "test":
            continue
        for a, b in combinations(cl["doc_ids"], 2):
            pairs += 1
            hit += a in owner and owner[a] == owner.get(b)
    assert hit / pairs >= 0.9


@pytest.mark.parametrize("kwargs", [dict(n_event_types=0), dict(paraphrases_per_cluster=1),
                                    dict(gold_fraction=0.7, test_fraction=0.5), dict(decoy_rate=2.0)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SynthSpec(**kwargs)
