"""Paragraph vectors, distributed bag-of-words variant with negative sampling.

Training walks documents in corpus order; every surviving token gives one
SGD step on the document vector and the output rows of the target and its
negatives. Randomness comes from a 48-bit linear congruential generator
seeded from ``params.seed`` so runs are bit-reproducible.
"""

from __future__ import annotations

import io
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import DataError
from .vectorize import Vocabulary

MAGIC = b"DESMINE-DV1\n"
_LCG_MUL = np.uint64(25214903917)
_LCG_ADD = np.uint64(11)
_MASK48 = np.uint64((1 << 48) - 1)


@dataclass(frozen=True)
class DocVecParams:
    dim: int = 100
    epochs: int = 20
    negative: int = 5
    initial_lr: float = 0.025
    final_lr: float = 0.0001
    min_count: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise DataError("docvec dim must be >= 1")
        if self.epochs < 1:
            raise DataError("docvec epochs must be >= 1")
        if self.negative < 0:
            raise DataError("docvec negative must be >= 0")
        if not self.initial_lr > self.final_lr > 0:
            raise DataError("docvec needs initial_lr > final_lr > 0")
        if self.min_count < 1:
            raise DataError("docvec min_count must be >= 1")


@dataclass
class DocVecModel:
    params: DocVecParams
    vocab: Vocabulary
    doc_vectors: np.ndarray   # (n_docs, dim)
    word_weights: np.ndarray  # (n_vocab, dim) output layer
    counts: np.ndarray        # token frequency, aligned with vocab indices
    epoch_loss: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.params.dim


@dataclass(frozen=True)
class Inferred:
    vector: np.ndarray
    all_oov: bool


# --------------------------------------------------------------------------- #
# numba kernels

@njit(cache=True)
def _next(state):
    return (state * _LCG_MUL + _LCG_ADD) & _MASK48


@njit(cache=True)
def _uniform(state):
    state = _next(state)
    return state, (state >> np.uint64(24)) / 16777216.0


@njit(cache=True)
def _init_vectors(n, dim, state):
    out = np.empty((n, dim))
    for i in range(n):
        for j in range(dim):
            state, u = _uniform(state)
            out[i, j] = (u - 0.5) / dim
    return out, state


@njit(cache=True)
def _sigmoid(x):
    if x > 30.0:
        return 1.0
    if x < -30.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True)
def _step(dvec, W, target, negative, cum, lr, state, update_words, work):
    """One token step. Returns (loss, state)."""
    dim = dvec.shape[0]
    for j in range(dim):
        work[j] = 0.0
    loss = 0.0
    total = cum[cum.shape[0] - 1]
    for s in range(negative + 1):
        if s == 0:
            w = target
            label = 1.0
        else:
            state, u = _uniform(state)
            w = np.searchsorted(cum, u * total, side="right")
            if w >= cum.shape[0]:
                w = cum.shape[0] - 1
            if w == target:
                continue
            label = 0.0
        dot = 0.0
        for j in range(dim):
            dot += dvec[j] * W[w, j]
        f = _sigmoid(dot)
        if label == 1.0:
            loss -= np.log(max(f, 1e-12))
        else:
            loss -= np.log(max(1.0 - f, 1e-12))
        g = (label - f) * lr
        for j in range(dim):
            work[j] += g * W[w, j]
        if update_words:
            for j in range(dim):
                W[w, j] += g * dvec[j]
    for j in range(dim):
        dvec[j] += work[j]
    return loss, state


@njit(cache=True)
def _train(D, W, doc_ptr, doc_tok, cum, epochs, negative, lr0, lr1, state, update_words):
    n_docs = D.shape[0]
    total_steps = epochs * doc_tok.shape[0]
    work = np.empty(D.shape[1])
    losses = np.zeros(epochs)
    step = 0
    for ep in range(epochs):
        ep_loss = 0.0
        for d in range(n_docs):
            for p in range(doc_ptr[d], doc_ptr[d + 1]):
                lr = lr0 - (lr0 - lr1) * step / max(total_steps - 1, 1)
                l, state = _step(D[d], W, doc_tok[p], negative, cum, lr, state, update_words, work)
                ep_loss += l
                step += 1
        losses[ep] = ep_loss / max(doc_tok.shape[0], 1)
    return losses, state


# --------------------------------------------------------------------------- #

def _noise_cdf(counts: np.ndarray) -> np.ndarray:
    return np.cumsum(counts.astype(np.float64) ** 0.75)


def _encode(docs, vocab: Vocabulary):
    ptr = np.zeros(len(docs) + 1, dtype=np.int64)
    toks = []
    for i, doc in enumerate(docs):
        ids = [vocab.index[t] for t in doc if t in vocab.index]
        toks.extend(ids)
        ptr[i + 1] = len(toks)
    return ptr, np.array(toks, dtype=np.int64)


def trainable(docs: Sequence[Sequence[str]], min_count: int) -> np.ndarray:
    """Positions of documents holding at least one token seen ``min_count`` times in ``docs``."""
    freq = Counter(t for doc in docs for t in doc)
    return np.array([i for i, doc in enumerate(docs) if any(freq[t] >= min_count for t in doc)], dtype=np.int64)


def train_docvec(docs: Sequence[Sequence[str]], params: DocVecParams | None = None,
                 ids: Sequence[str] | None = None) -> DocVecModel:
    params = params or DocVecParams()
    if not docs:
        raise DataError("cannot train document vectors on an empty corpus")
    ids = list(ids) if ids is not None else [str(i) for i in range(len(docs))]
    freq = Counter(t for doc in docs for t in doc)
    kept = sorted(t for t, n in freq.items() if n >= params.min_count)
    vocab = Vocabulary({t: i for i, t in enumerate(kept)}, min_df=params.min_count)
    ptr, toks = _encode(docs, vocab)
    for i in range(len(docs)):
        if ptr[i + 1] == ptr[i]:
            raise DataError(f"document {ids[i]!r} has no tokens with frequency >= {params.min_count}")
    counts = np.array([freq[t] for t in kept], dtype=np.int64)
    state = np.uint64(params.seed & ((1 << 48) - 1))
    D, state = _init_vectors(len(docs), params.dim, state)
    W = np.zeros((len(kept), params.dim))
    losses, _ = _train(D, W, ptr, toks, _noise_cdf(counts), params.epochs, params.negative,
                       params.initial_lr, params.final_lr, state, True)
    return DocVecModel(params, vocab, D, W, counts, [float(x) for x in losses])


def infer_docvec(model: DocVecModel, tokens: Sequence[str], steps: int = 20, seed: int = 0) -> Inferred:
    """Fit a fresh document vector against the frozen output weights."""
    if steps < 1:
        raise DataError("inference steps must be >= 1")
    state = np.uint64(seed & ((1 << 48) - 1))
    init, state = _init_vectors(1, model.dim, state)
    ptr, toks = _encode([tokens], model.vocab)
    if len(toks) == 0:
        return Inferred(init[0], True)
    p = model.params
    W = model.word_weights.copy()  # untouched by the kernel; copy guards the shared model
    _train(init, W, ptr, toks, _noise_cdf(model.counts), steps, p.negative,
           p.initial_lr, p.final_lr, state, False)
    return Inferred(init[0], False)


def infer_matrix(model: DocVecModel, docs, steps: int = 20, seed: int = 0) -> np.ndarray:
    out = np.zeros((len(docs), model.dim))
    for i, d in enumerate(docs):
        out[i] = infer_docvec(model, d, steps, seed + i).vector
    return out


# --------------------------------------------------------------------------- #
# persistence

def save_docvec(model: DocVecModel, path) -> None:
    meta = {
        "params": asdict(model.params),
        "vocab": model.vocab.tokens,
        "epoch_loss": [float(x).hex() for x in model.epoch_loss],
    }
    buf = io.BytesIO()
    np.savez(buf, doc_vectors=model.doc_vectors, word_weights=model.word_weights, counts=model.counts)
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(meta_bytes)}\n".encode())
        fh.write(meta_bytes)
        fh.write(buf.getvalue())


def load_docvec(path) -> DocVecModel:
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise DataError(f"{path}: not a DESMINE-DV1 document-vector model")
        n = int(fh.readline())
        meta = json.loads(fh.read(n).decode("utf-8"))
        arrays = np.load(io.BytesIO(fh.read()))
        tokens = meta["vocab"]
        params = DocVecParams(**meta["params"])
        return DocVecModel(
            params=params,
            vocab=Vocabulary({t: i for i, t in enumerate(tokens)}, min_df=params.min_count),
            doc_vectors=arrays["doc_vectors"],
            word_weights=arrays["word_weights"],
            counts=arrays["counts"],
            epoch_loss=[float.fromhex(x) for x in meta["epoch_loss"]],
        )
