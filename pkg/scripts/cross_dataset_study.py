"""Transfer matrices for both NewBest variants over every available corpus.

    python3 scripts/cross_dataset_study.py --data-dir $DESMINE_DATA_DIR --out results/

Writes one matrix.csv / heatmap.svg / matrix.json per preset and prints the
mean diagonal vs off-diagonal AUC, which is the within-vs-across comparison
the study rests on.
"""

import argparse
from pathlib import Path

import numpy as np

from desmine import corpus, protocol, registry, transfer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data-dir", type=Path, default=registry.data_dir())
    ap.add_argument("--embeddings", type=Path, default=None)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--diagonal-mode", choices=transfer.DIAGONAL_MODES, default="cv_within")
    args = ap.parse_args()

    paths = [registry.locate(n, args.data_dir) for n in registry.DATASETS]
    datasets = [corpus.load_dataset(p) for p in paths if p is not None]
    if len(datasets) < 2:
        raise SystemExit(f"need at least 2 datasets under {args.data_dir}")
    emb = args.embeddings or registry.embeddings_path(args.data_dir)

    for name in ("newbest", "newbest-alt"):
        spec = protocol.preset(name)
        if spec.vectorizer.name == "embedding_average":
            if emb is None:
                print(f"{name}: skipped, no embedding table")
                continue
            spec = protocol.with_embeddings(spec, emb)
        m = transfer.transfer_matrix(datasets, spec, args.seed, args.diagonal_mode)
        out = args.out / name
        out.mkdir(parents=True, exist_ok=True)
        transfer.export_csv(m, out / "matrix.csv")
        transfer.render_heatmap(m, out=out / "heatmap.svg", title=f"{name}: AUC")
        (out / "matrix.json").write_text(m.dumps(), encoding="utf-8")
        diag, off = np.mean(m.diagonal()), np.mean(m.off_diagonal())
        print(f"{name}: mean diagonal AUC {diag:.3f}, mean off-diagonal AUC {off:.3f}, gap {diag - off:+.3f}")


if __name__ == "__main__":
    main()
