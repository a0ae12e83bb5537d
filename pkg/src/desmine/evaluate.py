"""Confusion matrices, threshold metrics, rank-based ROC-AUC, CV runner, ZeroR baseline."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, StageError

METRICS = ("accuracy", "precision", "recall", "f1", "balanced_accuracy", "roc_auc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    balanced_accuracy: float
    roc_auc: float | None = None
    undefined: list[str] = field(default_factory=list)
    n: int = 0
    per_fold: dict[str, list[float]] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    note: str = ""

    def get(self, metric: str) -> float:
        if metric not in METRICS:
            raise DataError(f"unknown metric {metric!r}; valid: {', '.join(METRICS)}")
        val = getattr(self, metric)
        if val is None:
            raise DataError(f"metric {metric!r} was not computed for this report")
        return val

    def to_json(self) -> dict:
        def num(v):
            return None if v is None else float(v)
        out = {m: num(getattr(self, m)) for m in METRICS}
        out["n"] = self.n
        out["undefined"] = sorted(self.undefined)
        if self.per_fold:
            out["per_fold"] = {m: [float(x) for x in self.per_fold[m]] for m in sorted(self.per_fold)}
            out["std"] = {m: float(self.std[m]) for m in sorted(self.std)}
        if self.note:
            out["note"] = self.note
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def confusion(labels: Sequence[int], predictions: Sequence[int]) -> ConfusionMatrix:
    y = np.asarray(labels, dtype=np.int64)
    p = np.asarray(predictions, dtype=np.int64)
    if len(y) != len(p):
        raise DataError(f"labels ({len(y)}) and predictions ({len(p)}) differ in length")
    if len(y) == 0:
        raise DataError("confusion matrix of zero instances")
    return ConfusionMatrix(
        tp=int(((y == 1) & (p == 1)).sum()),
        fp=int(((y == 0) & (p == 1)).sum()),
        tn=int(((y == 0) & (p == 0)).sum()),
        fn=int(((y == 1) & (p == 0)).sum()),
    )


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return Fraction(0)
    return Fraction(num, den)


def metrics(cm: ConfusionMatrix, exact: bool = False) -> EvalReport:
    """Threshold metrics. Zero-denominator ratios are 0 and listed in ``undefined``.

    With ``exact=True`` the values are :class:`fractions.Fraction`.
    """
    if cm.total <= 0:
        raise DataError("metrics of an empty confusion matrix")
    undefined: list[str] = []
    acc = Fraction(cm.tp + cm.tn, cm.total)
    prec = _ratio(cm.tp, cm.tp + cm.fp, "precision", undefined)
    rec = _ratio(cm.tp, cm.tp + cm.fn, "recall", undefined)
    tnr = _ratio(cm.tn, cm.tn + cm.fp, "specificity", undefined)
    if "precision" in undefined or "recall" in undefined or prec + rec == 0:
        f1 = Fraction(0)
        undefined.append("f1")
    else:
        f1 = 2 * prec * rec / (prec + rec)
    bal = (rec + tnr) / 2
    if "recall" in undefined or "specificity" in undefined:
        undefined.append("balanced_accuracy")
    vals = (acc, prec, rec, f1, bal)
    if not exact:
        vals = tuple(float(v) for v in vals)
    return EvalReport(*vals, undefined=undefined, n=cm.total)


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney form of ROC-AUC using midranks for tied scores."""
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if len(y) != len(s):
        raise DataError("labels and scores differ in length")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("roc_auc needs both classes present")
    ranks = rankdata(s, method="average")
    r_pos = float(ranks[y == 1].sum())
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate_scores(labels: Sequence[int], scores: Sequence[float], threshold: float) -> EvalReport:
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    rep = metrics(confusion(y, (s >= threshold).astype(np.int64)))
    if 0 < y.sum() < len(y):
        rep.roc_auc = roc_auc(y, s)
    else:
        rep.undefined.append("roc_auc")
    return rep


def aggregate(reports: Sequence[EvalReport]) -> EvalReport:
    """Mean of per-fold metrics; per-fold values and sample stdev kept."""
    per_fold = {}
    means = {}
    std = {}
    for m in METRICS:
        vals = [r.get(m) for r in reports if getattr(r, m) is not None]
        if not vals:
            means[m] = None
            continue
        per_fold[m] = vals
        means[m] = statistics.fmean(vals)
        std[m] = statistics.stdev(vals) if len(vals) > 1 else 0.0
    undefined = sorted({u for r in reports for u in r.undefined})
    return EvalReport(**{m: means[m] for m in METRICS}, undefined=undefined,
                      n=sum(r.n for r in reports), per_fold=per_fold, std=std)


def cross_validate(protocol, dataset, k: int | None = None, seed: int | None = None) -> EvalReport:
    """k-fold CV of ``protocol`` on ``dataset``.

    Feature models are fitted on the training folds unless the protocol asks
    for global fitting; balancing only ever sees training folds.
    """
    from . import pipeline
    from .balance import kfold, stratified_folds

    k = k if k is not None else protocol.folds
    seed = seed if seed is not None else protocol.seed
    if k < 2:
        raise DataError("k must be >= 2")
    docs = pipeline.prepare(protocol, dataset)
    y = np.asarray(dataset.labels, dtype=np.int64)
    try:
        if "stratify" in protocol.balance:
            folds = stratified_folds(y, k, seed)
        else:
            folds = kfold(len(y), k, seed)
    except DataError as e:
        raise StageError("validate", e) from e
    shared = pipeline.fit_features(protocol, docs, np.arange(len(docs))) if protocol.fit_features == "global" else None
    reports = []
    for f in range(k):
        tr, te = folds.train_indices(f), folds.test_indices(f)
        try:
            scores, threshold = pipeline.train_and_score(protocol, docs, y, tr, te, fold=f, features=shared)
        except StageError as e:
            raise StageError(e.stage, e.cause, f"fold {f}") from e
        reports.append(evaluate_scores(y[te], scores, threshold))
    return aggregate(reports)


def zeror_baseline(prevalence) -> EvalReport:
    """Metrics of the majority-class learner, scored against the majority class.

    Returned values are exact fractions; floats are read as their decimal text
    (``0.14`` -> ``7/50``).
    """
    p = prevalence if isinstance(prevalence, Fraction) else Fraction(str(prevalence))
    if not 0 < p < 1:
        raise DataError("prevalence must lie strictly between 0 and 1")
    majority_share = 1 - p if p < Fraction(1, 2) else p
    note = "majority class is non-design" if p < Fraction(1, 2) else "majority class is design (symmetric convention)"
    precision = majority_share
    recall = Fraction(1)
    f1 = 2 * precision * recall / (precision + recall)
    return EvalReport(
        accuracy=majority_share,
        precision=precision,
        recall=recall,
        f1=f1,
        balanced_accuracy=Fraction(1, 2),
        roc_auc=Fraction(1, 2),
        note=note,
    )
