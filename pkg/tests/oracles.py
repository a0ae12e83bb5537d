"""Independent reference implementations used by the unit and acceptance tests.

Each one is written the slow, obvious way (exact fractions, all pairs,
exhaustive search) and shares no code with the package.
"""

from fractions import Fraction

import numpy as np


def brute_auc(labels, scores):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def brute_bayes(X, y, x, alpha):
    """Posterior of class 1 for count vector ``x``: prior times per-occurrence likelihoods."""
    d = X.shape[1]
    post = []
    for c in (0, 1):
        rows = X[y == c]
        prior = Fraction(len(rows), len(y))
        counts = [Fraction(int(v)) for v in rows.sum(axis=0)]
        total = sum(counts)
        p = prior
        for t in range(d):
            for _ in range(int(x[t])):
                p *= (counts[t] + alpha) / (total + alpha * d)
        post.append(p)
    return post[1] / (post[0] + post[1])


def oracle_tree(X, y):
    """Exhaustive CART on integer features with exact Gini arithmetic.

    A leaf is the positive fraction; an inner node is (feature, threshold, left, right).
    """
    y = list(y)
    if len(set(y)) == 1:
        return Fraction(sum(y), len(y))
    best = None
    for f in range(X.shape[1]):
        values = sorted(set(X[:, f]))
        for lo, hi in zip(values, values[1:]):
            thr = Fraction(int(lo) + int(hi), 2)
            left = [yi for xi, yi in zip(X[:, f], y) if xi <= thr]
            right = [yi for xi, yi in zip(X[:, f], y) if xi > thr]
            gini = sum(Fraction(len(s), len(y)) * (1 - Fraction(sum(s), len(s)) ** 2
                                                    - Fraction(len(s) - sum(s), len(s)) ** 2)
                       for s in (left, right))
            if best is None or gini < best[0]:
                best = (gini, f, thr)
    if best is None:
        return Fraction(sum(y), len(y))
    _, f, thr = best
    mask = np.array([xi <= thr for xi in X[:, f]])
    y = np.array(y)
    return (f, thr, oracle_tree(X[mask], y[mask]), oracle_tree(X[~mask], y[~mask]))


def oracle_predict(node, x):
    while isinstance(node, tuple):
        f, thr, left, right = node
        node = left if x[f] <= thr else right
    return node


def finite_difference(f, w, b, h=1e-5):
    gw = np.zeros_like(w)
    for j in range(len(w)):
        e = np.zeros_like(w)
        e[j] = h
        gw[j] = (f(w + e, b) - f(w - e, b)) / (2 * h)
    gb = (f(w, b + h) - f(w, b - h)) / (2 * h)
    return gw, gb


def brute_knn(Xm, k):
    """Set of the k nearest other rows for every row, by squared distance."""
    out = []
    for i in range(len(Xm)):
        d = [(float(np.sum((Xm[i] - Xm[j]) ** 2)), j) for j in range(len(Xm)) if j != i]
        out.append({j for _, j in sorted(d)[:k]})
    return out


def recount(labels, preds):
    tp = sum(1 for a, b in zip(labels, preds) if a == b == 1)
    tn = sum(1 for a, b in zip(labels, preds) if a == b == 0)
    fp = sum(1 for a, b in zip(labels, preds) if a == 0 and b == 1)
    fn = sum(1 for a, b in zip(labels, preds) if a == 1 and b == 0)
    return tp, fp, tn, fn
