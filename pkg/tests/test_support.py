import numpy as np
import pytest

from desmine import pipeline, protocol, registry, synthetic
from desmine.errors import DataError, StageError


def test_synthetic_profiles_honoured():
    s = synthetic.make_suite(seed=1)
    for ds, p in zip(s.datasets, synthetic.PROFILES):
        assert (ds.name, len(ds), ds.design_count) == (p.name, p.total, p.design)
    assert synthetic.make_suite(seed=1).datasets[0] == s.datasets[0]
    assert synthetic.make_suite(seed=2).datasets[0] != s.datasets[0]


def test_balanced_corpus():
    ds = synthetic.balanced_corpus(n=100, seed=0)
    assert (len(ds), ds.design_count) == (100, 50)


def test_write_suite(tmp_path):
    s = synthetic.make_suite(seed=0, profiles=synthetic.PROFILES[:1])
    paths = synthetic.write_suite(s, tmp_path)
    assert [p.name for p in paths] == ["brunet2014.jsonl", "embeddings.vec"]


def test_registry(tmp_path, monkeypatch):
    monkeypatch.setenv("DESMINE_DATA_DIR", str(tmp_path))
    monkeypatch.delenv("DESMINE_EMBEDDINGS", raising=False)
    assert registry.locate("brunet") is None
    (tmp_path / "brunet2014.csv").write_text("text,label\n")
    assert registry.locate("brunet").name == "brunet2014.csv"
    (tmp_path / "brunet2014.jsonl").write_text("")
    assert registry.locate("brunet").name == "brunet2014.jsonl"
    assert registry.embeddings_path() is None
    (tmp_path / "embeddings.vec").write_text("a 1\n")
    assert registry.embeddings_path() == tmp_path / "embeddings.vec"
    refs = registry.references()
    assert refs["values"]["brunet_strict_naive_bayes_accuracy"] == 0.862
    assert refs["values"]["brunet_strict_decision_tree_accuracy"] == 0.931
    assert refs["values"]["brunet_stratified_decision_tree_accuracy"] == 0.876
    assert refs["values"]["newbest_auc"] == 0.84


def test_missing_embedding_file_is_stage_error():
    spec = protocol.from_dict({"desmine_protocol": 1, "seed": 0, "classifier": "logistic_regression",
                               "vectorizer": {"name": "embedding_average", "table": "/nope/e.vec"}})
    with pytest.raises(StageError, match="vectorize"):
        pipeline.fit_features(spec, [["a"]], np.arange(1))


def test_docvec_features_use_trained_rows_then_inference(suite):
    ds = suite.datasets[2].subset(range(60))
    spec = protocol.from_dict({"desmine_protocol": 1, "seed": 0, "classifier": "logistic_regression",
                               "vectorizer": {"name": "docvec", "params": {"dim": 6, "epochs": 2}}})
    docs = pipeline.prepare(spec, ds)
    feats = pipeline.fit_features(spec, docs, np.arange(40))
    X = feats.transform(docs, np.arange(60))
    assert np.array_equal(X[:40][list(feats.rows)], feats.model.doc_vectors[list(feats.rows.values())])
    copy = [list(d) for d in docs]
    Y = feats.transform(copy, np.arange(5))
    assert not np.array_equal(Y, X[:5])  # a different corpus object is always inferred


def test_derived_seeds_differ():
    seeds = {pipeline._derived_seed(0, 0, f) for f in range(10)}
    assert len(seeds) == 10
