"""Paragraph vectors + logistic regression on a balanced 4,000-document sample.

    python3 scripts/docvec_desk_scale.py --seeds 0 1 2

Uses $DESMINE_DATA_DIR/stackoverflow.jsonl when present, otherwise the
balanced synthetic surrogate. Reports held-out accuracy per seed.
"""

import argparse

import numpy as np

from desmine import classify, corpus, docvec, registry, synthetic
from desmine.balance import stratified_holdout
from desmine.classify import ClassifierSpec
from desmine.docvec import DocVecParams


def sample(seed, n):
    path = registry.locate("stackoverflow")
    if path is None:
        return synthetic.balanced_corpus(n=n, seed=seed), "synthetic"
    ds = corpus.load_dataset(path)
    y = np.array(ds.labels)
    rng = np.random.default_rng(seed)
    pick = np.concatenate([rng.choice(np.flatnonzero(y == c), n // 2, replace=False) for c in (0, 1)])
    return ds.subset(sorted(pick.tolist())), "stackoverflow"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=20)
    args = ap.parse_args()
    for seed in args.seeds:
        ds, origin = sample(seed, args.n)
        docs = [corpus.preprocess(t) for t in ds.texts]
        y = np.array(ds.labels)
        tr, te = stratified_holdout(y, (0.8, 0.2), seed)
        tr = tr[docvec.trainable([docs[i] for i in tr], 2)]
        model = docvec.train_docvec([docs[i] for i in tr], DocVecParams(dim=args.dim, epochs=args.epochs, seed=seed))
        clf = classify.fit(ClassifierSpec("logistic_regression", {"epochs": 500, "lr": 1.0}), model.doc_vectors, y[tr])
        Xte = docvec.infer_matrix(model, [docs[i] for i in te], seed=seed)
        acc = float((classify.predict_labels(clf, Xte) == y[te]).mean())
        print(f"seed {seed} [{origin}]: train {len(tr)}, held-out {len(te)}, accuracy {acc:.3f}")


if __name__ == "__main__":
    main()
