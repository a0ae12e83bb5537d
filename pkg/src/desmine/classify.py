"""Binary classifiers with a shared fit / predict_scores / predict_labels surface.

Feature matrices may be dense ``numpy`` arrays or ``scipy.sparse`` matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.special import expit

from .errors import DataError

ALGORITHMS = ("zeror", "naive_bayes", "decision_tree", "logistic_regression", "linear_svm")

DEFAULTS: dict[str, dict[str, Any]] = {
    "zeror": {},
    "naive_bayes": {"laplace_alpha": 1.0},
    "decision_tree": {"max_depth": None, "min_samples_split": 2},
    "logistic_regression": {"l2_lambda": 1e-4, "epochs": 100, "lr": 0.1},
    "linear_svm": {"l2_lambda": 1e-4, "epochs": 100, "lr": 0.1},
}

MAGIC = "DESMINE-M1"


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise DataError(f"unknown classifier {self.algorithm!r}; valid: {', '.join(ALGORITHMS)}")
        allowed = DEFAULTS[self.algorithm]
        unknown = sorted(set(self.hyperparameters) - set(allowed))
        if unknown:
            raise DataError(f"{self.algorithm}: unknown hyperparameters {unknown}; valid: {sorted(allowed)}")
        hp = {**allowed, **self.hyperparameters}
        object.__setattr__(self, "hyperparameters", {k: hp[k] for k in sorted(hp)})

    @property
    def margin_scores(self) -> bool:
        return self.algorithm == "linear_svm"

    @property
    def default_threshold(self) -> float:
        return 0.0 if self.margin_scores else 0.5

    def to_json(self) -> dict:
        return {"algorithm": self.algorithm, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "ClassifierSpec":
        return cls(obj["algorithm"], dict(obj.get("hyperparameters", {})), int(obj.get("seed", 0)))


@dataclass
class TrainedModel:
    spec: ClassifierSpec
    feature_dim: int
    state: dict


# --------------------------------------------------------------------------- #
# helpers

def _as_matrix(X):
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return X


def _check_xy(X, y):
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != len(y):
        raise DataError(f"feature rows ({X.shape[0]}) and labels ({len(y)}) differ in length")
    if len(y) < 2:
        raise DataError("need at least 2 training instances")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    return X, y


def _dot(X, w):
    return np.asarray(X @ w).ravel()


# --------------------------------------------------------------------------- #
# naive Bayes

def _fit_nb(X, y, alpha):
    if (X.data if sp.issparse(X) else X).min(initial=0.0) < 0:
        raise DataError("naive_bayes needs nonnegative features (counts or tf-idf)")
    d = X.shape[1]
    log_prior = np.empty(2)
    log_lik = np.empty((2, d))
    for c in (0, 1):
        Xc = X[y == c]
        counts = np.asarray(Xc.sum(axis=0)).ravel()
        log_prior[c] = math.log((y == c).sum() / len(y))
        log_lik[c] = np.log(counts + alpha) - math.log(counts.sum() + alpha * d)
    return {"log_prior": log_prior, "log_lik": log_lik}


def _score_nb(st, X):
    diff = st["log_prior"][1] - st["log_prior"][0]
    return expit(diff + _dot(X, st["log_lik"][1] - st["log_lik"][0]))


# --------------------------------------------------------------------------- #
# decision tree (CART, Gini)

_TIE = 1e-12


def _best_split(Xn, yn):
    """Return (feature, threshold) for the best Gini split of a node, or None.

    Maximizes sum over children of (pos^2 + neg^2) / size, which is the same as
    minimizing the size-weighted Gini impurity. Ties go to the lowest feature
    index, then the lowest threshold.
    """
    n = len(yn)
    varying = np.flatnonzero(Xn.max(axis=0) > Xn.min(axis=0))
    if len(varying) == 0:
        return None
    V = Xn[:, varying]
    order = np.argsort(V, axis=0, kind="stable")
    vs = np.take_along_axis(V, order, axis=0)
    ys = yn[order].astype(np.float64)
    pos_l = np.cumsum(ys, axis=0)[:-1]
    n_l = np.arange(1, n, dtype=np.float64)[:, None]
    neg_l = n_l - pos_l
    pos_r = yn.sum() - pos_l
    n_r = n - n_l
    neg_r = n_r - pos_r
    score = (pos_l ** 2 + neg_l ** 2) / n_l + (pos_r ** 2 + neg_r ** 2) / n_r
    valid = vs[:-1] < vs[1:]
    score = np.where(valid, score, -np.inf)
    best = score.max()
    hit = (score >= best - _TIE * max(1.0, abs(best))).T  # feature-major
    flat = int(np.argmax(hit.ravel()))
    j, i = divmod(flat, n - 1)
    thr = (vs[i, j] + vs[i + 1, j]) / 2.0
    if thr >= vs[i + 1, j]:  # midpoint of adjacent floats rounded up
        thr = vs[i, j]
    return int(varying[j]), float(thr)


def _rows_dense(X, idx):
    sub = X[idx]
    return sub.toarray() if sp.issparse(sub) else sub


def _fit_tree(X, y, max_depth, min_samples_split):
    feature, threshold, left, right, value = [], [], [], [], []
    # iterative pre-order growth; deep trees would overflow Python recursion
    stack = [(np.arange(len(y)), 0, -1, None)]
    while stack:
        idx, depth, parent, side = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if side == "L" else right)[parent] = node
        yn = y[idx]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(yn.mean()))
        if yn.min() == yn.max() or len(idx) < min_samples_split:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        Xn = _rows_dense(X, idx)
        split = _best_split(Xn, yn)
        if split is None:
            continue
        f, t = split
        go_left = Xn[:, f] <= t
        feature[node], threshold[node] = f, t
        stack.append((idx[~go_left], depth + 1, node, "R"))
        stack.append((idx[go_left], depth + 1, node, "L"))
    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value),
    }


def _score_tree(st, X):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    feat, thr, left, right = st["feature"], st["threshold"], st["left"], st["right"]
    active = feat[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        vals = np.asarray(X[r, feat[nd]]).ravel()
        node[r] = np.where(vals <= thr[nd], left[nd], right[nd])
        active = feat[node] >= 0
    return st["value"][node].copy()


# --------------------------------------------------------------------------- #
# logistic regression

def lr_objective(w, b, X, y, l2_lambda):
    """Mean log-loss plus (l2_lambda / 2) * ||w||^2; the bias is not penalized."""
    z = _dot(X, w) + b
    # log(1 + e^z) - y z, computed stably
    loss = np.logaddexp(0.0, z) - y * z
    return float(loss.mean() + 0.5 * l2_lambda * np.dot(w, w))


def lr_gradient(w, b, X, y, l2_lambda):
    r = expit(_dot(X, w) + b) - y
    gw = np.asarray(X.T @ r).ravel() / len(y) + l2_lambda * w
    return gw, float(r.mean())


def _fit_lr(X, y, l2_lambda, epochs, lr):
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(int(epochs)):
        gw, gb = lr_gradient(w, b, X, y, l2_lambda)
        w -= lr * gw
        b -= lr * gb
    return {"w": w, "b": np.array([b])}


# --------------------------------------------------------------------------- #
# linear SVM: SGD on the primal with w stored as scale * v

@njit(cache=True)
def _svm_epochs(indptr, indices, data, ys, dim, lam, lr0, orders, trace):
    v = np.zeros(dim)
    scale = 1.0
    b = 0.0
    t = 0
    n = ys.shape[0]
    for ep in range(orders.shape[0]):
        for k in range(n):
            i = orders[ep, k]
            eta = lr0 / (1.0 + lr0 * lam * t)
            m = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                m += v[indices[p]] * data[p]
            m = ys[i] * (scale * m + b)
            scale *= 1.0 - eta * lam
            if scale < 1e-9:
                for j in range(dim):
                    v[j] *= scale
                scale = 1.0
            if m < 1.0:
                step = eta * ys[i] / scale
                for p in range(indptr[i], indptr[i + 1]):
                    v[indices[p]] += step * data[p]
                b += eta * ys[i]
            t += 1
        # epoch objective
        hinge = 0.0
        for i in range(n):
            m = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                m += v[indices[p]] * data[p]
            m = 1.0 - ys[i] * (scale * m + b)
            if m > 0:
                hinge += m
        norm2 = 0.0
        for j in range(dim):
            norm2 += v[j] * v[j]
        trace[ep] = hinge / n + 0.5 * lam * scale * scale * norm2
    return v * scale, b


def svm_objective(w, b, X, y, l2_lambda):
    ys = 2.0 * np.asarray(y) - 1.0
    hinge = np.maximum(0.0, 1.0 - ys * (_dot(X, w) + b))
    return float(hinge.mean() + 0.5 * l2_lambda * np.dot(w, w))


def _fit_svm(X, y, l2_lambda, epochs, lr, seed):
    Xs = sp.csr_matrix(X)
    Xs.sort_indices()
    rng = np.random.default_rng(seed)
    orders = np.stack([rng.permutation(len(y)) for _ in range(int(epochs))]) if epochs else np.zeros((0, len(y)), np.int64)
    trace = np.zeros(int(epochs))
    w, b = _svm_epochs(Xs.indptr.astype(np.int64), Xs.indices.astype(np.int64), Xs.data,
                       2.0 * y - 1.0, X.shape[1], float(l2_lambda), float(lr), orders, trace)
    return {"w": w, "b": np.array([b]), "objective_trace": trace}


# --------------------------------------------------------------------------- #
# public surface

def fit(spec: ClassifierSpec, X, y: Sequence[int]) -> TrainedModel:
    X, y = _check_xy(X, y)
    hp = spec.hyperparameters
    algo = spec.algorithm
    if algo != "zeror" and y.min() == y.max():
        raise DataError(f"{algo} needs both classes in the training data")
    if algo == "zeror":
        prev = float(y.mean())
        state = {"prevalence": np.array([prev]), "majority": np.array([1 if prev >= 0.5 else 0])}
    elif algo == "naive_bayes":
        state = _fit_nb(X, y, float(hp["laplace_alpha"]))
    elif algo == "decision_tree":
        state = _fit_tree(X, y, hp["max_depth"], int(hp["min_samples_split"]))
    elif algo == "logistic_regression":
        state = _fit_lr(X, y, float(hp["l2_lambda"]), int(hp["epochs"]), float(hp["lr"]))
    else:
        state = _fit_svm(X, y, float(hp["l2_lambda"]), int(hp["epochs"]), float(hp["lr"]), spec.seed)
    return TrainedModel(spec, X.shape[1], state)


def predict_scores(model: TrainedModel, X) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != model.feature_dim:
        raise DataError(f"feature dimension {X.shape[1]} does not match model ({model.feature_dim})")
    st = model.state
    algo = model.spec.algorithm
    if algo == "zeror":
        return np.full(X.shape[0], st["prevalence"][0])
    if algo == "naive_bayes":
        return _score_nb(st, X)
    if algo == "decision_tree":
        return _score_tree(st, X)
    z = _dot(X, st["w"]) + st["b"][0]
    return expit(z) if algo == "logistic_regression" else z


def predict_labels(model: TrainedModel, X, threshold: float | None = None) -> np.ndarray:
    if threshold is None:
        threshold = model.spec.default_threshold
    return (predict_scores(model, X) >= threshold).astype(np.int64)


# --------------------------------------------------------------------------- #
# persistence

def _encode_state(state):
    return {k: {"dtype": str(v.dtype), "shape": list(v.shape), "data": v.ravel().tolist()} for k, v in sorted(state.items())}


def _decode_state(obj):
    return {k: np.array(v["data"], dtype=v["dtype"]).reshape(v["shape"]) for k, v in obj.items()}


def dumps_model(model: TrainedModel) -> str:
    body = {"spec": model.spec.to_json(), "feature_dim": model.feature_dim, "state": _encode_state(model.state)}
    return MAGIC + "\n" + json.dumps(body, sort_keys=True) + "\n"


def loads_model(text: str) -> TrainedModel:
    head, _, body = text.partition("\n")
    if head != MAGIC:
        raise DataError("not a DESMINE-M1 model file")
    obj = json.loads(body)
    return TrainedModel(ClassifierSpec.from_json(obj["spec"]), int(obj["feature_dim"]), _decode_state(obj["state"]))


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())


# --------------------------------------------------------------------------- #
# grid search

def grid_search(grid: Sequence[ClassifierSpec], dataset, protocol, k: int = 10, metric: str = "roc_auc"):
    """Stratified k-fold mean of ``metric`` per spec; returns (best_spec, reports).

    Ties keep the earliest spec in grid order.
    """
    from dataclasses import replace

    from .evaluate import cross_validate

    if not grid:
        raise DataError("grid search needs at least one classifier spec")
    balance = tuple(sorted(set(protocol.balance) | {"stratify"}))
    reports = []
    best, best_val = None, -math.inf
    for spec in grid:
        proto = replace(protocol, classifier=spec, balance=balance)
        try:
            rep = cross_validate(proto, dataset, k=k, seed=protocol.seed)
        except DataError as e:
            raise DataError(f"grid search failed for {spec.to_json()}: {e}") from e
        reports.append(rep)
        val = getattr(rep, metric)
        if val > best_val:
            best, best_val = spec, val
    return best, reports
