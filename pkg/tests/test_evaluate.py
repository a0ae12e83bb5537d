import statistics
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from desmine import evaluate, pipeline, protocol
from desmine.evaluate import ConfusionMatrix, EvalReport, confusion, metrics, roc_auc, zeror_baseline
from desmine.errors import DataError, StageError

from oracles import brute_auc
from conftest import make_dataset


@pytest.mark.parametrize("labels, preds, cm", [
    ([1, 1, 0, 0], [1, 0, 0, 0], ConfusionMatrix(tp=1, fp=0, tn=2, fn=1)),
    ([1, 0, 1], [1, 0, 1], ConfusionMatrix(tp=2, fp=0, tn=1, fn=0)),
    ([1, 1, 1], [0, 0, 0], ConfusionMatrix(tp=0, fp=0, tn=0, fn=3)),
])
def test_confusion(labels, preds, cm):
    assert confusion(labels, preds) == cm


def test_confusion_length_mismatch():
    with pytest.raises(DataError):
        confusion([1, 0], [1])


def test_metrics_hand_example():
    r = metrics(ConfusionMatrix(tp=1, fp=0, tn=2, fn=1))
    assert (r.precision, r.recall, r.accuracy, r.balanced_accuracy) == (1.0, 0.5, 0.75, 0.75)
    assert r.f1 == pytest.approx(2 / 3, abs=1e-12)


def test_metrics_perfect_and_undefined():
    r = metrics(ConfusionMatrix(3, 0, 5, 0))
    assert all(getattr(r, m) == 1.0 for m in ("accuracy", "precision", "recall", "f1", "balanced_accuracy"))
    r = metrics(ConfusionMatrix(0, 0, 5, 0))
    assert {"precision", "recall", "f1"} <= set(r.undefined)
    assert r.precision == 0 and r.accuracy == 1
    with pytest.raises(DataError):
        metrics(ConfusionMatrix(0, 0, 0, 0))


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_metrics_of_confusion_match_recount(pairs):
    labels = [a for a, _ in pairs]
    preds = [b for _, b in pairs]
    r = metrics(confusion(labels, preds), exact=True)
    tp = sum(1 for a, b in pairs if a == b == 1)
    tn = sum(1 for a, b in pairs if a == b == 0)
    p_pred = sum(preds)
    p_true = sum(labels)
    n = len(pairs)
    assert r.accuracy == Fraction(tp + tn, n)
    if p_pred:
        assert r.precision == Fraction(tp, p_pred)
    if p_true:
        assert r.recall == Fraction(tp, p_true)
    if p_true and n - p_true:
        assert r.balanced_accuracy == (Fraction(tp, p_true) + Fraction(tn, n - p_true)) / 2
    if p_pred and p_true and tp:
        assert r.f1 == Fraction(2 * tp, p_pred + p_true)
    for m in ("accuracy", "precision", "recall", "f1", "balanced_accuracy"):
        assert 0 <= getattr(r, m) <= 1


@pytest.mark.parametrize("labels, scores, expected", [
    ([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8], 0.75),
    ([0, 0, 1, 1], [0.1, 0.2, 0.3, 0.4], 1.0),
    ([0, 1, 0, 1], [0.5, 0.5, 0.5, 0.5], 0.5),
    ([1, 0], [0.0, 1.0], 0.0),
])
def test_roc_auc_examples(labels, scores, expected):
    assert roc_auc(labels, scores) == expected


def test_roc_auc_needs_both_classes():
    with pytest.raises(DataError):
        roc_auc([1, 1], [0.1, 0.2])


labelled_scores = st.integers(2, 50).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
    st.lists(st.integers(0, 6).map(lambda v: v / 4), min_size=n, max_size=n),
)).filter(lambda t: 0 < sum(t[0]) < len(t[0]))


@given(labelled_scores)
def test_roc_auc_matches_brute_force(ls):
    labels, scores = ls
    assert abs(roc_auc(labels, scores) - brute_auc(labels, scores)) <= 1e-12


@given(labelled_scores)
def test_roc_auc_invariant_to_monotone_transform(ls):
    labels, scores = ls
    s = np.array(scores)
    assert roc_auc(labels, s) == pytest.approx(roc_auc(labels, np.exp(3 * s) - 7), abs=1e-12)
    assert roc_auc(labels, s) + roc_auc(labels, -s) == pytest.approx(1.0, abs=1e-12)


def test_zeror_baseline_exact():
    r = zeror_baseline(0.14)
    assert (r.accuracy, r.precision, r.recall, r.balanced_accuracy) == (
        Fraction(43, 50), Fraction(43, 50), 1, Fraction(1, 2))
    assert r.f1 == Fraction(86, 93)
    assert float(r.f1) == pytest.approx(0.93, abs=0.01)


@given(st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000)))
def test_zeror_balanced_accuracy_always_half(p):
    r = zeror_baseline(p)
    assert r.balanced_accuracy == Fraction(1, 2)
    assert r.accuracy == max(p, 1 - p)


def test_zeror_half_prevalence():
    assert zeror_baseline(0.5).accuracy == Fraction(1, 2)
    with pytest.raises(DataError):
        zeror_baseline(0)


def test_aggregate_mean_and_sample_stdev():
    reps = [EvalReport(a, a, a, a, a, roc_auc=a, n=10) for a in (0.5, 0.7, 0.9)]
    agg = evaluate.aggregate(reps)
    assert agg.accuracy == pytest.approx(0.7)
    assert agg.std["accuracy"] == pytest.approx(statistics.stdev([0.5, 0.7, 0.9]))
    assert agg.per_fold["roc_auc"] == [0.5, 0.7, 0.9]
    assert agg.n == 30


def test_report_json_is_stable():
    r = EvalReport(0.5, 0.5, 0.5, 0.5, 0.5, roc_auc=0.5, n=4)
    assert r.dumps() == EvalReport(0.5, 0.5, 0.5, 0.5, 0.5, roc_auc=0.5, n=4).dumps()
    with pytest.raises(DataError, match="unknown metric"):
        r.get("auc")


# --------------------------------------------------------------------------- #
# cross-validation


def _toy(n=150, seed=0):
    rng = np.random.default_rng(seed)
    texts, labels = [], []
    for i in range(n):
        y = int(rng.random() < 0.3)
        pool = ["api", "design", "module", "layer"] if y else ["fix", "typo", "test", "bump"]
        texts.append(" ".join(rng.choice(pool + ["thing", "stuff", "code"], size=8)))
        labels.append(y)
    return make_dataset(texts, labels)


def _proto(**over):
    obj = {"desmine_protocol": 1, "seed": 0, "vectorizer": "count", "classifier": "naive_bayes",
           "validation": {"kfold": 5}, "balance": ["stratify"]}
    obj.update(over)
    return protocol.from_dict(obj)


def test_cross_validate_runs_and_is_deterministic():
    a = evaluate.cross_validate(_proto(), _toy())
    b = evaluate.cross_validate(_proto(), _toy())
    assert a.dumps() == b.dumps()
    assert len(a.per_fold["accuracy"]) == 5
    assert a.accuracy > 0.8


def test_cross_validate_zeror_balanced_accuracy_half():
    r = evaluate.cross_validate(_proto(classifier="zeror"), _toy())
    assert r.balanced_accuracy == 0.5


def test_smote_only_sees_training_rows(monkeypatch):
    seen = []
    real = pipeline.smote

    def spy(X, y, params):
        seen.append(X.shape[0])
        return real(X, y, params)

    monkeypatch.setattr(pipeline, "smote", spy)
    ds = _toy()
    evaluate.cross_validate(_proto(balance=["stratify", "smote"]), ds, k=5)
    assert seen == [len(ds) - len(ds) // 5] * 5


def test_per_fold_features_fit_on_training_rows_only(monkeypatch):
    sizes = []
    real = pipeline.fit_features

    def spy(proto, docs, idx):
        sizes.append(len(idx))
        return real(proto, docs, idx)

    monkeypatch.setattr(pipeline, "fit_features", spy)
    evaluate.cross_validate(_proto(), _toy(), k=5)
    assert sizes == [120] * 5
    sizes.clear()
    evaluate.cross_validate(_proto(fit_features="global"), _toy(), k=5)
    assert sizes == [150]


def test_cross_validate_stage_error_names_fold():
    ds = make_dataset(["a b"] * 10 + ["c d"] * 10, [1] * 10 + [0] * 10)
    bad = _proto(vectorizer={"name": "count", "min_df": 50})
    with pytest.raises(StageError, match="stage 'vectorize' \\(fold 0\\)"):
        evaluate.cross_validate(bad, ds, k=2)
