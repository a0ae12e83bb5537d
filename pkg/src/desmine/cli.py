"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import classify, corpus, docvec, protocol, registry, transfer
from .balance import stratified_holdout
from .errors import DataError
from .evaluate import METRICS

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# --------------------------------------------------------------------------- #
# helpers

def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_data(args, path=None):
    path = path or args.data
    return corpus.load_dataset(path, args.format, **_csv_kwargs(args, path))


def _csv_kwargs(args, path):
    fmt = args.format or ("csv" if str(path).lower().endswith(".csv") else "jsonl")
    if fmt != "csv":
        return {}
    return {"text_col": args.text_col, "label_col": args.label_col}


def _protocol(args):
    spec = protocol.load(args.protocol)
    if getattr(args, "embeddings", None):
        spec = protocol.with_embeddings(spec, args.embeddings)
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, seed=args.seed, smote=replace(spec.smote, seed=args.seed),
                       classifier=replace(spec.classifier, seed=args.seed))
    return spec


def _fmt_report(rep) -> str:
    def pm(m):
        v = getattr(rep, m)
        if v is None:
            return f"{m}=n/a"
        s = rep.std.get(m)
        return f"{m}={v:.3f}" + (f"±{s:.3f}" if s is not None else "")
    return "  ".join(pm(m) for m in METRICS)


# --------------------------------------------------------------------------- #
# subcommands

def cmd_stats(args):
    ds = _load_data(args)
    st = corpus.stats(ds)
    if args.json:
        print(json.dumps({"dataset": ds.name, **st.to_json()}, sort_keys=True))
    else:
        print(f"{'dataset':<20} {'total':>8} {'design':>8} {'mean_length':>12} {'vocab_size':>11}")
        print(f"{ds.name:<20} {st.total:>8} {st.design:>8} {st.mean_length:>12.2f} {st.vocab_size:>11}")
    return EXIT_OK


def cmd_run(args):
    spec = _protocol(args)
    ds = _load_data(args)
    result = protocol.execute(spec, ds)
    out = _out_dir(args.out)
    _write(out / "result.json", result.dumps(timestamps=args.timestamps))
    _write(out / "protocol.dot", protocol.render_dot(result.spec))
    k = spec.validation.label()
    print(f"{spec.name} on {ds.name} [{k}]: {_fmt_report(result.report)}")
    if result.report.per_fold:
        print(f"per-fold AUC mean: {result.report.roc_auc:.3f} over {len(result.report.per_fold['roc_auc'])} folds")
    return EXIT_OK


def _replicate_rows(ds, stratified: bool, seed):
    refs = registry.references()
    vals, tols = refs["values"], refs["tolerances"]
    strict = protocol.preset("brunet-strict")
    if seed is not None:
        strict = replace(strict, seed=seed)
    rows = []
    for algo in ("naive_bayes", "decision_tree"):
        spec = replace(strict, classifier=classify.ClassifierSpec(algo, seed=strict.seed))
        key = f"brunet_strict_{algo}_accuracy"
        rows.append((f"brunet-strict {algo}", protocol.execute(spec, ds).report.accuracy, vals[key], tols[key]))
    if stratified:
        spec = protocol.preset("brunet-stratified")
        if seed is not None:
            spec = replace(spec, seed=seed)
        key = "brunet_stratified_decision_tree_accuracy"
        rows.append(("brunet-stratified decision_tree", protocol.execute(spec, ds).report.accuracy, vals[key], tols[key]))
    return rows


def cmd_replicate(args):
    path = Path(args.data) if args.data else registry.locate("brunet")
    if path is None or not path.exists():
        print("brunet dataset not found. Provide --data PATH or set DESMINE_DATA_DIR to a directory "
              "holding brunet2014.jsonl (or .csv); the corpus ships with the original study's "
              "replication package and is never downloaded by this tool.", file=sys.stderr)
        return EXIT_DATA
    ds = corpus.load_dataset(path, args.format, **_csv_kwargs(args, path))
    rows = _replicate_rows(ds, args.stratified, args.seed)
    print(f"{'run':<34} {'accuracy':>9} {'reference':>10} {'delta':>8}  status")
    out_rows = []
    for name, acc, ref, tol in rows:
        delta = acc - ref
        status = "PASS" if abs(delta) <= tol else "FAIL"
        print(f"{name:<34} {acc:>9.3f} {ref:>10.3f} {delta:>+8.3f}  {status} (±{tol})")
        out_rows.append({"run": name, "accuracy": acc, "reference": ref, "delta": delta,
                         "tolerance": tol, "status": status})
    if args.out:
        _write(_out_dir(args.out) / "replicate.json", json.dumps(out_rows, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_crossdataset(args):
    if len(args.data) < 2:
        raise UsageError("crossdataset needs at least 2 --data paths")
    spec = _protocol(args)
    datasets = [_load_data(args, p) for p in args.data]
    m = transfer.transfer_matrix(datasets, spec, spec.seed, args.diagonal_mode, args.folds)
    for ext in args.external or []:
        m = transfer.add_external(m, transfer.ingest_predictions(ext, datasets), datasets)
    out = _out_dir(args.out)
    transfer.export_csv(m, out / "matrix.csv", args.metric)
    transfer.render_heatmap(m, args.metric, out / "heatmap.svg", title=f"{spec.name}: {args.metric}")
    _write(out / "matrix.json", m.dumps())
    diag, off = np.mean(m.diagonal(args.metric)), np.mean(m.off_diagonal(args.metric))
    print(f"{len(datasets)}x{len(datasets)} matrix ({args.metric}): mean diagonal {diag:.3f}, "
          f"mean off-diagonal {off:.3f}")
    return EXIT_OK


def cmd_train_docvec(args):
    ds = _load_data(args)
    opts = corpus.CleanOptions(stopword_set=args.stopwords)
    docs = [corpus.preprocess(t, opts) for t in ds.texts]
    params = docvec.DocVecParams(dim=args.dim, epochs=args.epochs, negative=args.negative,
                                 initial_lr=args.initial_lr, final_lr=args.final_lr,
                                 min_count=args.min_count, seed=args.seed)
    y = np.asarray(ds.labels)
    summary = {"dataset": ds.name, "params": asdict(params)}
    if args.heldout:
        tr, te = stratified_holdout(y, (1 - args.heldout, args.heldout), args.seed)
    else:
        tr, te = np.arange(len(ds)), np.zeros(0, dtype=np.int64)
    # documents without any frequent token have nothing to train on
    tr = tr[docvec.trainable([docs[i] for i in tr], params.min_count)]
    ids = [ds.discussions[i].id for i in tr]
    model = docvec.train_docvec([docs[i] for i in tr], params, ids=ids)
    summary["epoch_loss"] = model.epoch_loss
    if len(te):
        clf = classify.fit(classify.ClassifierSpec("logistic_regression", {"epochs": 500, "lr": 1.0}), model.doc_vectors, y[tr])
        Xte = docvec.infer_matrix(model, [docs[i] for i in te], seed=args.seed)
        acc_tr = float((classify.predict_labels(clf, model.doc_vectors) == y[tr]).mean())
        acc_te = float((classify.predict_labels(clf, Xte) == y[te]).mean())
        summary.update(train_accuracy=acc_tr, heldout_accuracy=acc_te, heldout_fraction=args.heldout)
        print(f"docvec+logistic_regression: train accuracy {acc_tr:.3f}, held-out accuracy {acc_te:.3f}")
    out = _out_dir(args.out)
    docvec.save_docvec(model, out / "docvec.model")
    _write(out / "docvec.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"trained {len(tr)} document vectors (dim {params.dim}, vocab {len(model.vocab)})")
    return EXIT_OK


def cmd_gridsearch(args):
    spec = _protocol(args)
    ds = _load_data(args)
    try:
        grid_obj = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read grid file {args.grid}: {e}") from e
    if not isinstance(grid_obj, list):
        raise DataError("grid file must hold a JSON list of classifier specs")
    grid = [protocol._parse_classifier(g, spec.seed) for g in grid_obj]
    best, reports = classify.grid_search(grid, ds, spec, k=args.folds, metric=args.metric)
    rows = [{"classifier": g.to_json(), "report": r.to_json()} for g, r in zip(grid, reports)]
    _write(_out_dir(args.out) / "gridsearch.json",
           json.dumps({"best": best.to_json(), "metric": args.metric, "results": rows}, indent=2, sort_keys=True) + "\n")
    for g, r in zip(grid, reports):
        print(f"{g.algorithm:<20} {json.dumps(g.hyperparameters, sort_keys=True):<60} {args.metric}={r.get(args.metric):.3f}")
    print(f"best: {best.algorithm} {json.dumps(best.hyperparameters, sort_keys=True)}")
    return EXIT_OK


def cmd_render(args):
    if not args.protocol and not args.matrix:
        raise UsageError("render needs --protocol and/or --matrix")
    out = _out_dir(args.out)
    if args.protocol:
        _write(out / "protocol.dot", protocol.render_dot(protocol.load(args.protocol)))
    if args.matrix:
        try:
            m = transfer.TransferMatrix.from_json(json.loads(Path(args.matrix).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError) as e:
            raise DataError(f"cannot read matrix {args.matrix}: {e}") from e
        transfer.render_heatmap(m, args.metric, out / "heatmap.svg")
    return EXIT_OK


# --------------------------------------------------------------------------- #
# parser

def _add_data_flags(p, multiple=False):
    if multiple:
        p.add_argument("--data", action="extend", nargs="+", required=True, metavar="PATH", help="dataset files (JSONL or CSV)")
    else:
        p.add_argument("--data", required=True, metavar="PATH", help="dataset file (JSONL or CSV)")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None, help="dataset format (default: by extension)")
    p.add_argument("--text-col", default="text", help="CSV text column (default: text)")
    p.add_argument("--label-col", default="label", help="CSV label column (default: label)")


def _add_seed(p, default=None):
    p.add_argument("--seed", type=int, default=default, help="random seed (overrides the protocol seed)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="desmine", description="Design-discussion mining workbench.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="dataset characterization (counts, mean length, vocabulary)")
    _add_data_flags(p)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    _add_seed(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="execute a protocol on one dataset")
    p.add_argument("--protocol", required=True, help="protocol JSON file or preset name")
    _add_data_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--embeddings", help="embedding table replacing the protocol's table path")
    p.add_argument("--timestamps", action="store_true", help="include wall-clock timestamps in result.json")
    _add_seed(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replicate", help="strict replication against the published reference values")
    p.add_argument("target", choices=("brunet",), help="replication target")
    p.add_argument("--data", help="dataset file (default: $DESMINE_DATA_DIR/brunet2014.jsonl)")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None, help="dataset format (default: by extension)")
    p.add_argument("--text-col", default="text", help="CSV text column (default: text)")
    p.add_argument("--label-col", default="label", help="CSV label column (default: label)")
    p.add_argument("--stratified", action="store_true", help="add the stratified decision-tree row")
    p.add_argument("--out", help="directory for replicate.json (nothing written when omitted)")
    _add_seed(p)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("crossdataset", help="train-on-X / test-on-Y transfer matrix")
    p.add_argument("--protocol", required=True, help="protocol JSON file or preset name")
    _add_data_flags(p, multiple=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--external", action="append", metavar="CSV", help="external predictions (model,dataset,id,score); repeatable")
    p.add_argument("--metric", choices=METRICS, default="roc_auc", help="metric for CSV and heat map (default: roc_auc)")
    p.add_argument("--diagonal-mode", choices=transfer.DIAGONAL_MODES, default="cv_within", help="diagonal cells (default: cv_within)")
    p.add_argument("--folds", type=int, default=None, help="folds for cv_within diagonal (default: protocol k)")
    p.add_argument("--embeddings", help="embedding table replacing the protocol's table path")
    _add_seed(p)
    p.set_defaults(func=cmd_crossdataset)

    p = sub.add_parser("train-docvec", help="train paragraph vectors on a dataset")
    _add_data_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dim", type=int, default=100, help="vector size (default: 100)")
    p.add_argument("--epochs", type=int, default=20, help="training epochs (default: 20)")
    p.add_argument("--negative", type=int, default=5, help="negative samples per token (default: 5)")
    p.add_argument("--min-count", type=int, default=2, help="token frequency floor (default: 2)")
    p.add_argument("--initial-lr", type=float, default=0.025, help="initial learning rate (default: 0.025)")
    p.add_argument("--final-lr", type=float, default=0.0001, help="final learning rate (default: 0.0001)")
    p.add_argument("--stopwords", choices=corpus.STOPWORD_SETS, default="english", help="stop list (default: english)")
    p.add_argument("--heldout", type=float, default=0.0, help="held-out fraction scored with logistic regression (default: 0)")
    _add_seed(p, default=0)
    p.set_defaults(func=cmd_train_docvec)

    p = sub.add_parser("gridsearch", help="stratified k-fold search over classifier specs")
    p.add_argument("--protocol", required=True, help="protocol JSON file or preset name")
    _add_data_flags(p)
    p.add_argument("--grid", required=True, help="JSON file holding a list of classifier specs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--folds", type=int, default=10, help="folds (default: 10)")
    p.add_argument("--metric", choices=METRICS, default="balanced_accuracy", help="selection metric (default: balanced_accuracy)")
    p.add_argument("--embeddings", help="embedding table replacing the protocol's table path")
    _add_seed(p)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("render", help="render a protocol as DOT and/or a matrix as SVG")
    p.add_argument("--protocol", help="protocol JSON file or preset name")
    p.add_argument("--matrix", help="matrix.json written by crossdataset")
    p.add_argument("--metric", choices=METRICS, default="roc_auc", help="heat-map metric (default: roc_auc)")
    p.add_argument("--out", required=True, help="output directory")
    _add_seed(p)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"desmine {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"desmine {args.command}: {e}", file=sys.stderr)
        return EXIT_DATA
    except AssertionError as e:
        print(f"desmine {args.command}: internal invariant violated: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
