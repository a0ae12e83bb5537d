"""Cross-dataset transfer matrices, external prediction rows, SVG heat maps, CSV export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import pipeline
from .corpus import Dataset
from .errors import DataError, StageError
from .evaluate import METRICS, EvalReport, cross_validate, evaluate_scores

DIAGONAL_MODES = ("cv_within", "train_test_same")
SCALE_LO, SCALE_HI = 0.4, 1.0


@dataclass
class ExternalPredictions:
    model: str
    scores: dict[str, list[tuple[str, float]]]  # dataset name -> [(id, score)]


@dataclass
class TransferMatrix:
    datasets: list[str]
    cells: dict[tuple[str, str], EvalReport]  # (train, test) -> report
    diagonal_mode: str = "cv_within"
    external: dict[str, dict[str, EvalReport]] = field(default_factory=dict)  # model -> test -> report

    def value(self, train: str, test: str, metric: str = "roc_auc") -> float:
        return self.cells[(train, test)].get(metric)

    def diagonal(self, metric: str = "roc_auc") -> list[float]:
        return [self.value(d, d, metric) for d in self.datasets]

    def off_diagonal(self, metric: str = "roc_auc") -> list[float]:
        return [self.value(a, b, metric) for a in self.datasets for b in self.datasets if a != b]

    def to_json(self) -> dict:
        return {
            "datasets": list(self.datasets),
            "diagonal_mode": self.diagonal_mode,
            "cells": [{"train": a, "test": b, "report": self.cells[(a, b)].to_json()}
                      for a in self.datasets for b in self.datasets],
            "external": {m: {d: r.to_json() for d, r in sorted(rows.items())}
                         for m, rows in sorted(self.external.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "TransferMatrix":
        def rep(o):
            return EvalReport(**{m: o.get(m) for m in METRICS}, undefined=list(o.get("undefined", [])),
                              n=o.get("n", 0), per_fold=o.get("per_fold", {}), std=o.get("std", {}))
        cells = {(c["train"], c["test"]): rep(c["report"]) for c in obj["cells"]}
        ext = {m: {d: rep(r) for d, r in rows.items()} for m, rows in obj.get("external", {}).items()}
        return cls(list(obj["datasets"]), cells, obj.get("diagonal_mode", "cv_within"), ext)


# --------------------------------------------------------------------------- #
# matrix computation

def _check(datasets: Sequence[Dataset]):
    if len(datasets) < 2:
        raise DataError("a transfer matrix needs at least 2 datasets")
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise DataError(f"dataset names must be unique, got {names}")


def _fit_on(protocol, ds: Dataset, docs):
    y = np.asarray(ds.labels, dtype=np.int64)
    return pipeline.train(protocol, docs, y, np.arange(len(docs)))


def compute_cell(datasets: Sequence[Dataset], protocol, seed: int, train: str, test: str,
                 diagonal_mode: str = "cv_within", k: int | None = None) -> EvalReport:
    """One (train, test) cell computed from scratch."""
    by_name = {d.name: d for d in datasets}
    proto = replace(protocol, seed=seed)
    src, dst = by_name[train], by_name[test]
    where = f"cell train={train} test={test}"
    try:
        if train == test and diagonal_mode == "cv_within":
            return cross_validate(proto, src, k or proto.folds, seed)
        fitted = _fit_on(proto, src, pipeline.prepare(proto, src))
        dst_docs = pipeline.prepare(proto, dst)
        scores = pipeline.score(fitted, dst_docs, np.arange(len(dst_docs)))
        return evaluate_scores(dst.labels, scores, fitted.threshold)
    except StageError as e:
        raise StageError(e.stage, e.cause, where if not e.where else f"{where}, {e.where}") from e
    except DataError as e:
        raise DataError(f"{where}: {e}") from e


def transfer_matrix(datasets: Sequence[Dataset], protocol, seed: int,
                    diagonal_mode: str = "cv_within", k: int | None = None) -> TransferMatrix:
    """Train on each dataset in full, score every other dataset in full.

    The diagonal is within-dataset k-fold CV (``cv_within``) or the
    resubstitution score (``train_test_same``). Balancing only touches
    training data.
    """
    _check(datasets)
    if diagonal_mode not in DIAGONAL_MODES:
        raise DataError(f"unknown diagonal_mode {diagonal_mode!r}; valid: {', '.join(DIAGONAL_MODES)}")
    proto = replace(protocol, seed=seed)
    docs = {d.name: pipeline.prepare(proto, d) for d in datasets}
    cells: dict[tuple[str, str], EvalReport] = {}
    for src in datasets:
        fitted = None
        for dst in datasets:
            where = f"cell train={src.name} test={dst.name}"
            try:
                if src is dst and diagonal_mode == "cv_within":
                    cells[(src.name, dst.name)] = cross_validate(proto, src, k or proto.folds, seed)
                    continue
                if fitted is None:
                    fitted = _fit_on(proto, src, docs[src.name])
                scores = pipeline.score(fitted, docs[dst.name], np.arange(len(dst)))
                cells[(src.name, dst.name)] = evaluate_scores(dst.labels, scores, fitted.threshold)
            except StageError as e:
                raise StageError(e.stage, e.cause, where if not e.where else f"{where}, {e.where}") from e
            except DataError as e:
                raise DataError(f"{where}: {e}") from e
    return TransferMatrix([d.name for d in datasets], cells, diagonal_mode)


# --------------------------------------------------------------------------- #
# external predictions

def ingest_predictions(path, datasets: Sequence[Dataset]) -> ExternalPredictions:
    """Read ``model,dataset,id,score`` rows produced by a model outside this package."""
    by_name = {d.name: {x.id for x in d.discussions} for d in datasets}
    model = None
    scores: dict[str, list[tuple[str, float]]] = {}
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [h.strip() for h in reader.fieldnames] != ["model", "dataset", "id", "score"]:
            raise DataError(f"{path}: header must be model,dataset,id,score")
        for rowno, row in enumerate(reader, 2):
            where = f"{path}: row {rowno}"
            if model is None:
                model = row["model"]
            elif row["model"] != model:
                raise DataError(f"{where}: one model per predictions file ({model!r} vs {row['model']!r})")
            ds, rid = row["dataset"], row["id"]
            if ds not in by_name:
                raise DataError(f"{where}: unknown dataset {ds!r}")
            if rid not in by_name[ds]:
                raise DataError(f"{where}: id {rid!r} not found in dataset {ds!r}")
            if (ds, rid) in seen:
                raise DataError(f"{where}: duplicate prediction for ({ds}, {rid})")
            seen.add((ds, rid))
            try:
                s = float(row["score"])
            except (TypeError, ValueError):
                raise DataError(f"{where}: score {row['score']!r} is not a number") from None
            if not math.isfinite(s):
                raise DataError(f"{where}: non-finite score")
            scores.setdefault(ds, []).append((rid, s))
    if model is None:
        raise DataError(f"{path}: no prediction rows")
    return ExternalPredictions(model, scores)


def evaluate_external(preds: ExternalPredictions, datasets: Sequence[Dataset],
                      threshold: float = 0.5) -> dict[str, EvalReport]:
    out = {}
    for d in datasets:
        rows = preds.scores.get(d.name)
        if not rows:
            continue
        label = {x.id: x.label for x in d.discussions}
        out[d.name] = evaluate_scores([label[i] for i, _ in rows], [s for _, s in rows], threshold)
    return out


def add_external(matrix: TransferMatrix, preds: ExternalPredictions, datasets: Sequence[Dataset],
                 threshold: float = 0.5) -> TransferMatrix:
    """Copy of ``matrix`` with one extra row for ``preds``; computed cells are untouched."""
    ext = dict(matrix.external)
    ext[preds.model] = evaluate_external(preds, datasets, threshold)
    return TransferMatrix(list(matrix.datasets), dict(matrix.cells), matrix.diagonal_mode, ext)


# --------------------------------------------------------------------------- #
# output

def _fmt(v) -> str:
    return "" if v is None else f"{v:.3f}"


def export_csv(matrix: TransferMatrix, out, metric: str = "roc_auc") -> None:
    """Rows are test datasets, columns are training datasets.

    External rows follow, one per model, with each value placed in the column
    of the dataset it was scored on.
    """
    names = matrix.datasets
    try:
        fh = open(out, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise DataError(f"cannot write {out}: {e}") from e
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test\\train"] + names)
        for test in names:
            w.writerow([test] + [_fmt(matrix.value(train, test, metric)) for train in names])
        for model in sorted(matrix.external):
            rows = matrix.external[model]
            w.writerow([f"external:{model}"] + [_fmt(rows[d].get(metric)) if d in rows else "" for d in names])


def read_csv_matrix(path) -> tuple[list[str], dict[tuple[str, str], float]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    vals = {}
    for row in rows[1:]:
        if row[0].startswith("external:"):
            continue
        for train, cell in zip(names, row[1:]):
            vals[(train, row[0])] = float(cell)
    return names, vals


def _shade(v: float) -> tuple[float, str]:
    t = min(1.0, max(0.0, (v - SCALE_LO) / (SCALE_HI - SCALE_LO)))
    lo, hi = (247, 251, 255), (8, 48, 107)
    rgb = tuple(round(a + (b - a) * t) for a, b in zip(lo, hi))
    return t, "#%02x%02x%02x" % rgb


def render_heatmap(matrix: TransferMatrix, metric: str = "roc_auc", out=None, title: str | None = None) -> str:
    """Square grid SVG: x = training dataset, y = test dataset (plus external rows).

    Fill intensity is linear in the metric over [0.4, 1.0], clamped. Returns
    the SVG text and writes it to ``out`` when given.
    """
    names = matrix.datasets
    rows = [(t, [matrix.value(tr, t, metric) for tr in names]) for t in names]
    for model in sorted(matrix.external):
        ext = matrix.external[model]
        rows.append((f"external:{model}", [ext[d].get(metric) if d in ext else None for d in names]))
    cell, left, top = 80, 150, 50
    bottom = 90
    width = left + cell * len(names) + 20
    height = top + cell * len(rows) + bottom
    title = title or f"Cross-dataset {metric}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<text x="{width / 2:.1f}" y="24" font-size="15" text-anchor="middle">{escape(title)}</text>',
    ]
    for r, (label, vals) in enumerate(rows):
        y = top + r * cell
        parts.append(f'<text class="ylabel" x="{left - 8}" y="{y + cell / 2 + 4:.1f}" font-size="12" '
                     f'text-anchor="end">{escape(label)}</text>')
        for c, v in enumerate(vals):
            x = left + c * cell
            if v is None:
                parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="#ffffff" stroke="#cccccc"/>')
                continue
            t, fill = _shade(v)
            ink = "#ffffff" if t > 0.55 else "#000000"
            parts.append(f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" '
                         f'stroke="#ffffff" data-train="{escape(names[c])}" data-test="{escape(label)}" '
                         f'data-value="{v:.6f}"/>')
            parts.append(f'<text class="value" x="{x + cell / 2:.1f}" y="{y + cell / 2 + 5:.1f}" font-size="14" '
                         f'text-anchor="middle" fill="{ink}">{v:.3f}</text>')
    base = top + cell * len(rows)
    for c, name in enumerate(names):
        x = left + c * cell + cell / 2
        parts.append(f'<text class="xlabel" x="{x:.1f}" y="{base + 18}" font-size="12" '
                     f'text-anchor="middle">{escape(name)}</text>')
    parts.append(f'<text x="{left + cell * len(names) / 2:.1f}" y="{base + 48}" font-size="12" '
                 f'text-anchor="middle">Trained on</text>')
    parts.append(f'<text x="14" y="{top + cell * len(rows) / 2:.1f}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 14 {top + cell * len(rows) / 2:.1f})">Tested on</text>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if out is not None:
        try:
            Path(out).write_text(svg, encoding="utf-8")
        except OSError as e:
            raise DataError(f"cannot write {out}: {e}") from e
    return svg
