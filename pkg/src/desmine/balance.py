"""Stratified fold assignment and SMOTE oversampling."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    folds: np.ndarray  # fold index per instance

    def test_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds == f)

    def train_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds != f)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.folds, minlength=self.k)


@dataclass(frozen=True)
class SmoteParams:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise DataError("SMOTE k_neighbors must be >= 1")
        if not 0 < self.target_ratio <= 1:
            raise DataError("SMOTE target_ratio must lie in (0, 1]")


def stratified_folds(labels: Sequence[int], k: int = 10, seed: int = 0) -> FoldAssignment:
    """Shuffle each class by ``seed`` and deal it round-robin into ``k`` folds.

    The dealing position carries over from one class to the next, which keeps
    total fold sizes within one of each other as well as per-class counts.
    """
    y = np.asarray(labels)
    if k < 2:
        raise DataError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    pos = 0
    for c in (0, 1):
        members = np.flatnonzero(y == c)
        if len(members) < k:
            raise DataError(f"class {c} has {len(members)} members, fewer than k={k} folds")
        members = rng.permutation(members)
        folds[members] = (pos + np.arange(len(members))) % k
        pos = (pos + len(members)) % k
    return FoldAssignment(k, folds)


def kfold(n: int, k: int = 10, seed: int = 0) -> FoldAssignment:
    """Unstratified shuffled folds of near-equal size."""
    if k < 2 or n < k:
        raise DataError(f"cannot split {n} instances into k={k} folds")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=np.int64)
    folds[order] = np.arange(n) % k
    return FoldAssignment(k, folds)


def stratified_holdout(labels: Sequence[int], fractions: Sequence[float], seed: int = 0) -> list[np.ndarray]:
    """Split indices into len(fractions) parts, class-stratified, sorted within each part."""
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[] for _ in fractions]
    cum = np.cumsum(fractions)
    for c in (0, 1):
        members = rng.permutation(np.flatnonzero(y == c))
        cuts = np.round(cum * len(members)).astype(int)
        start = 0
        for i, stop in enumerate(cuts):
            parts[i].extend(members[start:stop].tolist())
            start = stop
    return [np.array(sorted(p), dtype=np.int64) for p in parts]


# --------------------------------------------------------------------------- #
# SMOTE

def _sq_norms(X):
    if sp.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", X, X)


def _neighbours(X, k: int, chunk: int = 2048) -> np.ndarray:
    """k nearest other rows of X by Euclidean distance; ties by lower index."""
    n = X.shape[0]
    norms = _sq_norms(X)
    out = np.empty((n, k), dtype=np.int64)
    idx = np.arange(n)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        G = X[lo:hi] @ X.T
        G = G.toarray() if sp.issparse(G) else np.asarray(G)
        d2 = norms[lo:hi, None] + norms[None, :] - 2.0 * G
        np.maximum(d2, 0.0, out=d2)
        for r in range(hi - lo):
            row = d2[r].copy()
            row[lo + r] = np.inf
            order = np.lexsort((idx, row))
            out[lo + r] = order[:k]
    return out


def smote(X, y: Sequence[int], params: SmoteParams | None = None):
    """Append synthetic minority rows until minority/majority reaches the target ratio.

    Originals come first and are returned unchanged. ``X`` may be dense or
    scipy-sparse; the output keeps the input's kind.
    """
    X_aug, y_aug, _ = smote_with_origin(X, y, params)
    return X_aug, y_aug


def smote_with_origin(X, y: Sequence[int], params: SmoteParams | None = None):
    """:func:`smote` plus an ``(n_synthetic, 2)`` array of the input rows each
    synthetic sample interpolates between (base, neighbour)."""
    params = params or SmoteParams()
    y = np.asarray(y, dtype=np.int64)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    minority = 1 if n_pos <= n_neg else 0
    n_min, n_maj = min(n_pos, n_neg), max(n_pos, n_neg)
    need = max(0, math.ceil(params.target_ratio * n_maj - 1e-9) - n_min)
    empty_origin = np.zeros((0, 2), dtype=np.int64)
    if need == 0:
        return X, y, empty_origin
    if n_min < 2:
        raise DataError(f"SMOTE needs at least 2 minority instances, got {n_min}")
    k = params.k_neighbors
    if k >= n_min:
        warnings.warn(f"SMOTE k_neighbors={k} >= minority size {n_min}; clamped to {n_min - 1}",
                      stacklevel=2)
        k = n_min - 1

    sparse = sp.issparse(X)
    if sparse:
        X = sp.csr_matrix(X, dtype=np.float64)
    else:
        X = np.asarray(X, dtype=np.float64)
    members = np.flatnonzero(y == minority)
    Xm = X[members]
    nn = _neighbours(Xm, k)

    rng = np.random.default_rng(params.seed)
    reps = math.ceil(need / n_min)
    base = np.concatenate([rng.permutation(n_min) for _ in range(reps)])[:need]
    pick = rng.integers(0, k, size=need)
    u = rng.random(need)
    partner = nn[base, pick]

    if sparse:
        a, b = Xm[base], Xm[partner]
        synth = a + sp.diags(u) @ (b - a)
        synth = sp.csr_matrix(synth)
        synth.eliminate_zeros()
        X_aug = sp.vstack([X, synth], format="csr")
    else:
        a, b = Xm[base], Xm[partner]
        synth = a + u[:, None] * (b - a)
        X_aug = np.vstack([X, synth])
    y_aug = np.concatenate([y, np.full(need, minority, dtype=np.int64)])
    origin = np.stack([members[base], members[partner]], axis=1)
    return X_aug, y_aug, origin
