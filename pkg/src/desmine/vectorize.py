"""Token lists to feature vectors: counts, top-k bigrams, TF-IDF, embedding averages.

Batch helpers (``*_matrix``) return ``scipy.sparse.csr_matrix`` or dense
``numpy`` arrays with one row per document; the single-document functions
return :class:`SparseVector` or a dense array.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError

Doc = Sequence[str]


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def __len__(self):
        return len(self.indices)


def _sparse(entries: dict[int, float], dim: int) -> SparseVector:
    idx = np.array(sorted(k for k, v in entries.items() if v != 0), dtype=np.int64)
    vals = np.array([entries[i] for i in idx], dtype=np.float64)
    return SparseVector(idx, vals, dim)


# --------------------------------------------------------------------------- #
# Vocabulary and bigrams

@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    min_df: int = 1
    max_features: int | None = None

    def __len__(self):
        return len(self.index)

    def __contains__(self, token):
        return token in self.index

    @property
    def tokens(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)


def build_vocabulary(docs: Sequence[Doc], min_df: int = 1, max_features: int | None = None) -> Vocabulary:
    if not docs:
        raise DataError("cannot build a vocabulary from an empty corpus")
    df = Counter()
    tf = Counter()
    for doc in docs:
        tf.update(doc)
        df.update(set(doc))
    keep = [t for t, n in df.items() if n >= min_df]
    if max_features is not None and len(keep) > max_features:
        keep.sort(key=lambda t: (-tf[t], t))
        keep = keep[:max_features]
    if not keep:
        raise DataError(f"vocabulary is empty (min_df={min_df})")
    keep.sort()
    return Vocabulary({t: i for i, t in enumerate(keep)}, min_df, max_features)


@dataclass(frozen=True)
class BigramSet:
    pairs: tuple[tuple[str, str], ...]
    k: int
    index: dict[tuple[str, str], int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {p: i for i, p in enumerate(self.pairs)})

    def __len__(self):
        return len(self.pairs)


def _bigrams(doc: Doc) -> Iterable[tuple[str, str]]:
    return zip(doc, doc[1:])


def top_bigrams(docs: Sequence[Doc], k: int = 200) -> BigramSet:
    """Top ``k`` adjacent-token pairs by corpus frequency, ties lexicographic."""
    if k < 1:
        raise DataError("k must be >= 1")
    counts = Counter()
    for doc in docs:
        counts.update(_bigrams(doc))
    ranked = sorted(counts, key=lambda p: (-counts[p], p))
    return BigramSet(tuple(ranked[:k]), k)


def count_vectorize(tokens: Doc, vocab: Vocabulary, bigrams: BigramSet | None = None) -> SparseVector:
    entries: dict[int, float] = {}
    for t in tokens:
        i = vocab.index.get(t)
        if i is not None:
            entries[i] = entries.get(i, 0) + 1.0
    dim = len(vocab)
    if bigrams is not None:
        for p in set(_bigrams(tokens)):
            j = bigrams.index.get(p)
            if j is not None:
                entries[dim + j] = 1.0
        dim += len(bigrams)
    return _sparse(entries, dim)


def _stack(vectors: Sequence[SparseVector], dim: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for r, v in enumerate(vectors):
        indptr[r + 1] = indptr[r] + len(v)
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def count_matrix(docs: Sequence[Doc], vocab: Vocabulary, bigrams: BigramSet | None = None) -> sp.csr_matrix:
    dim = len(vocab) + (len(bigrams) if bigrams is not None else 0)
    return _stack([count_vectorize(d, vocab, bigrams) for d in docs], dim)


# --------------------------------------------------------------------------- #
# TF-IDF

@dataclass(frozen=True)
class IdfModel:
    idf: np.ndarray
    n_docs: int

    def weight(self, vocab: Vocabulary, token: str) -> float:
        return float(self.idf[vocab.index[token]])


def fit_tfidf(docs: Sequence[Doc], vocab: Vocabulary) -> IdfModel:
    """Smoothed idf: ln((1 + n) / (1 + df)) + 1."""
    if not docs:
        raise DataError("cannot fit idf on an empty corpus")
    df = np.zeros(len(vocab))
    for doc in docs:
        for t in set(doc):
            i = vocab.index.get(t)
            if i is not None:
                df[i] += 1
    n = len(docs)
    return IdfModel(np.log((1.0 + n) / (1.0 + df)) + 1.0, n)


def tfidf_vectorize(tokens: Doc, vocab: Vocabulary, idf: IdfModel) -> SparseVector:
    counts = count_vectorize(tokens, vocab)
    if not len(counts):
        return counts
    vals = counts.values * idf.idf[counts.indices]
    vals = vals / math.sqrt(float(np.dot(vals, vals)))
    return SparseVector(counts.indices, vals, counts.dim)


def tfidf_matrix(docs: Sequence[Doc], vocab: Vocabulary, idf: IdfModel) -> sp.csr_matrix:
    return _stack([tfidf_vectorize(d, vocab, idf) for d in docs], len(vocab))


# --------------------------------------------------------------------------- #
# Embeddings

class EmbeddingTable:
    """Token -> dense vector lookup with cached cosine neighbours."""

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] < 1 or vectors.shape[0] != len(tokens):
            raise DataError("embedding table needs one row of length >= 1 per token")
        self.tokens = list(tokens)
        self.vectors = vectors
        self.index = {t: i for i, t in enumerate(self.tokens)}
        self._unit = None
        self._token_keys = np.array(self.tokens, dtype=str)
        self._neighbours: dict[tuple[str, int], list[tuple[str, float]]] = {}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def __getitem__(self, token) -> np.ndarray:
        return self.vectors[self.index[token]]

    def neighbours(self, token: str, n: int) -> list[tuple[str, float]]:
        """``n`` most cosine-similar tokens (excluding ``token``), ties by token."""
        key = (token, n)
        if key not in self._neighbours:
            if self._unit is None:
                norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
                self._unit = self.vectors / np.where(norms == 0, 1.0, norms)
            i = self.index[token]
            sims = self._unit @ self._unit[i]
            sims[i] = -np.inf
            order = np.lexsort((self._token_keys, -sims))
            self._neighbours[key] = [(self.tokens[j], float(sims[j])) for j in order[:n] if j != i]
        return self._neighbours[key]


def load_embeddings(path, restrict_to: Vocabulary | Iterable[str] | None = None) -> EmbeddingTable:
    """Read the plain-text vector format (optional ``<count> <dim>`` header)."""
    keep = None
    if restrict_to is not None:
        keep = set(restrict_to.index) if isinstance(restrict_to, Vocabulary) else set(restrict_to)
    dim = None
    tokens, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            if dim is None:
                dim = len(parts) - 1
            if len(parts) - 1 != dim:
                raise DataError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            if keep is not None and parts[0] not in keep:
                continue
            try:
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector value") from None
            tokens.append(parts[0])
    if not tokens:
        raise DataError(f"{path}: no embedding rows loaded")
    if dim is not None and dim < 1:
        raise DataError(f"{path}: embedding dimension must be >= 1")
    return EmbeddingTable(tokens, np.array(rows))


def write_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for t, v in zip(table.tokens, table.vectors):
            fh.write(t + " " + " ".join(repr(float(x)) for x in v) + "\n")


def embed_average(tokens: Doc, table: EmbeddingTable) -> np.ndarray:
    rows = [table.index[t] for t in tokens if t in table.index]
    if not rows:
        return np.zeros(table.dim)
    # sorted rows make the float sum independent of token order
    return table.vectors[sorted(rows)].mean(axis=0)


def embed_matrix(docs: Sequence[Doc], table: EmbeddingTable) -> np.ndarray:
    out = np.zeros((len(docs), table.dim))
    for r, d in enumerate(docs):
        out[r] = embed_average(d, table)
    return out


def expand_vocabulary(tokens: Doc, table: EmbeddingTable, n: int = 1, tau: float = 0.5) -> list[str]:
    if n < 1:
        raise DataError("expansion size n must be >= 1")
    if not -1.0 <= tau <= 1.0:
        raise DataError("tau must lie in [-1, 1]")
    out = list(tokens)
    seen = set(tokens)
    for t in tokens:
        if t not in table:
            continue
        for nb, sim in table.neighbours(t, n):
            if sim >= tau and nb not in seen:
                out.append(nb)
                seen.add(nb)
    return out
