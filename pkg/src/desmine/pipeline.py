"""Stage plumbing shared by cross-validation, holdout and cross-dataset runs.

``prepare`` turns a dataset into token lists; ``fit_features`` fits the
vectorizer on a subset of those; ``train`` balances and fits a classifier on
training rows only; ``score`` applies the fitted pair to any rows.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import classify, docvec, vectorize
from .balance import smote
from .corpus import preprocess
from .errors import DataError, StageError


@lru_cache(maxsize=8)
def _table(path: str, mtime: float) -> vectorize.EmbeddingTable:
    return vectorize.load_embeddings(path)


def embedding_table(path) -> vectorize.EmbeddingTable:
    path = os.path.abspath(path)
    if not os.path.exists(path):
        raise DataError(f"embedding file not found: {path}")
    return _table(path, os.path.getmtime(path))


@lru_cache(maxsize=4)
def _docvec_model(path: str, mtime: float) -> docvec.DocVecModel:
    return docvec.load_docvec(path)


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([abs(int(p)) for p in parts]).generate_state(1)[0])


def prepare(protocol, dataset) -> list[list[str]]:
    try:
        docs = [preprocess(t, protocol.preprocess) for t in dataset.texts]
    except DataError as e:
        raise StageError("preprocess", e) from e
    if protocol.expansion is not None:
        try:
            table = embedding_table(protocol.expansion.table or protocol.vectorizer.table)
            docs = [vectorize.expand_vocabulary(d, table, protocol.expansion.n, protocol.expansion.tau) for d in docs]
        except DataError as e:
            raise StageError("expand", e) from e
    return docs


# --------------------------------------------------------------------------- #
# fitted feature models

@dataclass
class CountFeatures:
    vocab: vectorize.Vocabulary
    bigrams: vectorize.BigramSet | None = None

    def transform(self, docs, idx):
        return vectorize.count_matrix([docs[i] for i in idx], self.vocab, self.bigrams)


@dataclass
class TfidfFeatures:
    vocab: vectorize.Vocabulary
    idf: vectorize.IdfModel

    def transform(self, docs, idx):
        return vectorize.tfidf_matrix([docs[i] for i in idx], self.vocab, self.idf)


@dataclass
class EmbeddingFeatures:
    table: vectorize.EmbeddingTable

    def transform(self, docs, idx):
        return vectorize.embed_matrix([docs[i] for i in idx], self.table)


@dataclass
class DocVecFeatures:
    model: docvec.DocVecModel
    fitted_on: list | None     # corpus whose rows have trained vectors
    rows: dict[int, int]       # corpus position -> row of model.doc_vectors
    infer_steps: int
    seed: int

    def transform(self, docs, idx):
        out = np.zeros((len(idx), self.model.dim))
        for r, i in enumerate(idx):
            if docs is self.fitted_on and i in self.rows:
                out[r] = self.model.doc_vectors[self.rows[i]]
            else:
                out[r] = docvec.infer_docvec(self.model, docs[i], self.infer_steps, self.seed).vector
        return out


def fit_features(protocol, docs, idx):
    vec = protocol.vectorizer
    sub = [docs[i] for i in idx]
    try:
        if vec.name in ("count", "bigram_top_k", "tfidf"):
            vocab = vectorize.build_vocabulary(sub, vec.min_df, vec.max_features)
            if vec.name == "count":
                return CountFeatures(vocab)
            if vec.name == "bigram_top_k":
                return CountFeatures(vocab, vectorize.top_bigrams(sub, vec.k))
            return TfidfFeatures(vocab, vectorize.fit_tfidf(sub, vocab))
        if vec.name == "embedding_average":
            return EmbeddingFeatures(embedding_table(vec.table))
        if vec.name == "docvec":
            if vec.model:
                path = os.path.abspath(vec.model)
                if not os.path.exists(path):
                    raise DataError(f"docvec model not found: {path}")
                return DocVecFeatures(_docvec_model(path, os.path.getmtime(path)), None, {}, vec.infer_steps, protocol.seed)
            params = vec.docvec_params(protocol.seed)
            # documents with no surviving tokens get inferred (initialisation) vectors
            keep = [int(idx[j]) for j in docvec.trainable(sub, params.min_count)]
            model = docvec.train_docvec([docs[i] for i in keep], params, ids=[str(i) for i in keep])
            return DocVecFeatures(model, docs, {i: r for r, i in enumerate(keep)}, vec.infer_steps, protocol.seed)
    except DataError as e:
        raise StageError("vectorize", e) from e
    raise StageError("vectorize", DataError(f"unknown vectorizer {vec.name!r}"))


# --------------------------------------------------------------------------- #

@dataclass
class Fitted:
    features: object
    model: classify.TrainedModel

    @property
    def threshold(self) -> float:
        return self.model.spec.default_threshold


def train(protocol, docs, y, tr, fold: int = 0, features=None) -> Fitted:
    """Fit features (unless given), balance the training rows, fit the classifier."""
    tr = np.asarray(tr)
    if features is None:
        features = fit_features(protocol, docs, tr)
    try:
        X = features.transform(docs, tr)
    except DataError as e:
        raise StageError("vectorize", e) from e
    ytr = np.asarray(y)[tr]
    if "smote" in protocol.balance:
        params = protocol.smote
        try:
            X, ytr = smote(X, ytr, type(params)(params.k_neighbors, params.target_ratio,
                                                _derived_seed(params.seed, protocol.seed, fold)))
        except DataError as e:
            raise StageError("balance", e) from e
    try:
        model = classify.fit(protocol.classifier, X, ytr)
    except DataError as e:
        raise StageError("classify", e) from e
    return Fitted(features, model)


def score(fitted: Fitted, docs, idx) -> np.ndarray:
    try:
        X = fitted.features.transform(docs, np.asarray(idx))
    except DataError as e:
        raise StageError("vectorize", e) from e
    return classify.predict_scores(fitted.model, X)


def train_and_score(protocol, docs, y, tr, te, fold: int = 0, features=None):
    fitted = train(protocol, docs, y, tr, fold, features)
    return score(fitted, docs, te), fitted.threshold
