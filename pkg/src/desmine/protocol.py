"""Declarative protocol maps: parse, validate, execute and render as DOT."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .balance import SmoteParams, stratified_holdout
from .classify import ClassifierSpec
from .corpus import CleanOptions, Dataset, read_stopword_file
from .docvec import DocVecParams
from .errors import DataError, ProtocolError, StageError
from .evaluate import EvalReport, cross_validate, evaluate_scores

VERSION = 1
VECTORIZERS = ("count", "bigram_top_k", "tfidf", "embedding_average", "docvec")
BALANCERS = ("stratify", "smote")
FIT_FEATURES = ("per_fold", "global")
PRESETS = ("brunet-strict", "brunet-stratified", "newbest", "newbest-alt")

_DOCVEC_KEYS = ("dim", "epochs", "negative", "initial_lr", "final_lr", "min_count")


@dataclass(frozen=True)
class VectorizerSpec:
    name: str
    k: int | None = None
    min_df: int = 1
    max_features: int | None = None
    table: str | None = None
    model: str | None = None
    docvec: dict | None = None
    infer_steps: int = 20

    def docvec_params(self, seed: int) -> DocVecParams:
        return DocVecParams(**(self.docvec or {}), seed=seed)

    def label(self) -> str:
        if self.name == "bigram_top_k":
            return f"bigram_top_k({self.k})"
        if self.name == "embedding_average":
            return f"embedding_average({Path(self.table).name})"
        if self.name == "docvec":
            return f"docvec(model={Path(self.model).name})" if self.model else "docvec(train)"
        return self.name

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name}
        if self.name in ("count", "bigram_top_k", "tfidf"):
            out.update(min_df=self.min_df, max_features=self.max_features)
        if self.name == "bigram_top_k":
            out["k"] = self.k
        if self.name == "embedding_average":
            out["table"] = self.table
        if self.name == "docvec":
            out["infer_steps"] = self.infer_steps
            if self.model:
                out["model"] = self.model
            else:
                out["params"] = dict(self.docvec)
        return out


@dataclass(frozen=True)
class Expansion:
    n: int = 1
    tau: float = 0.5
    table: str | None = None

    def to_json(self) -> dict:
        return {"n": self.n, "tau": self.tau, "table": self.table}


@dataclass(frozen=True)
class Validation:
    kind: str = "kfold"
    k: int = 10
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def label(self) -> str:
        if self.kind == "kfold":
            return f"kfold({self.k})"
        return "holdout(" + "/".join(f"{f:g}" for f in self.fractions) + ")"

    def to_json(self) -> dict:
        if self.kind == "kfold":
            return {"kfold": self.k}
        return {"holdout": list(self.fractions)}


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    seed: int
    preprocess: CleanOptions = field(default_factory=CleanOptions)
    vectorizer: VectorizerSpec = field(default_factory=lambda: VectorizerSpec("count"))
    expansion: Expansion | None = None
    balance: tuple[str, ...] = ()
    smote: SmoteParams = field(default_factory=SmoteParams)
    classifier: ClassifierSpec = field(default_factory=lambda: ClassifierSpec("naive_bayes"))
    validation: Validation = field(default_factory=Validation)
    fit_features: str = "per_fold"

    @property
    def folds(self) -> int:
        return self.validation.k

    def to_json(self) -> dict:
        balance: list = []
        for b in self.balance:
            balance.append({"smote": asdict(self.smote)} if b == "smote" else b)
        return {
            "desmine_protocol": VERSION,
            "name": self.name,
            "seed": self.seed,
            "preprocess": self.preprocess.to_json(),
            "vectorizer": self.vectorizer.to_json(),
            "expansion": self.expansion.to_json() if self.expansion else None,
            "balance": balance,
            "classifier": self.classifier.to_json(),
            "validation": self.validation.to_json(),
            "fit_features": self.fit_features,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------- #
# parsing

def _reject_unknown(obj: dict, allowed, where: str):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ProtocolError(f"{where}: unknown keys {extra}; valid: {sorted(allowed)}")


def _path(value, base: Path | None):
    if value is None:
        return None
    value = os.path.expandvars(str(value))
    if "$" in value or base is None or os.path.isabs(value):
        return value
    return str((base / value).resolve())


def _int(obj, key, where, default=None, minimum=None):
    val = obj.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise ProtocolError(f"{where}.{key} must be an integer")
    if minimum is not None and val < minimum:
        raise ProtocolError(f"{where}.{key} must be >= {minimum}")
    return val


def _parse_preprocess(obj, base) -> CleanOptions:
    if obj is None:
        return CleanOptions()
    if not isinstance(obj, dict):
        raise ProtocolError("preprocess must be an object")
    keys = ("lowercase", "strip_html_and_code", "strip_punctuation", "stopword_set",
            "domain_stopwords", "domain_stopwords_file")
    _reject_unknown(obj, keys, "preprocess")
    kwargs = {k: obj[k] for k in keys[:4] if k in obj}
    for k in keys[:3]:
        if k in kwargs and not isinstance(kwargs[k], bool):
            raise ProtocolError(f"preprocess.{k} must be true/false")
    if "stopword_set" in kwargs and kwargs["stopword_set"] not in ("none", "english", "english_plus_domain"):
        raise ProtocolError(f"unknown stopword_set {kwargs['stopword_set']!r}; valid: none, english, english_plus_domain")
    words = list(obj.get("domain_stopwords", [])) if "domain_stopwords" in obj else None
    if "domain_stopwords_file" in obj:
        words = (words or []) + list(read_stopword_file(_path(obj["domain_stopwords_file"], base)))
    if words is not None:
        kwargs["domain_stopwords"] = tuple(words)
    return CleanOptions(**kwargs)


def _parse_vectorizer(obj, base) -> VectorizerSpec:
    if isinstance(obj, str):
        obj = {"name": obj}
    if not isinstance(obj, dict) or "name" not in obj:
        raise ProtocolError("vectorizer must be a name or an object with a 'name'")
    name = obj["name"]
    if name not in VECTORIZERS:
        raise ProtocolError(f"unknown vectorizer {name!r}; valid: {', '.join(VECTORIZERS)}")
    where = f"vectorizer[{name}]"
    if name in ("count", "tfidf"):
        _reject_unknown(obj, ("name", "min_df", "max_features"), where)
    elif name == "bigram_top_k":
        _reject_unknown(obj, ("name", "k", "min_df", "max_features"), where)
    elif name == "embedding_average":
        _reject_unknown(obj, ("name", "table"), where)
        if not obj.get("table"):
            raise ProtocolError("embedding_average needs a 'table' path")
    else:
        _reject_unknown(obj, ("name", "params", "model", "infer_steps"), where)
    params = None
    if name == "docvec" and not obj.get("model"):
        params = dict(obj.get("params") or {})
        _reject_unknown(params, _DOCVEC_KEYS, "vectorizer[docvec].params")
        try:
            resolved = asdict(DocVecParams(**params))
        except (DataError, TypeError) as e:
            raise ProtocolError(f"vectorizer[docvec].params: {e}") from e
        params = {k: resolved[k] for k in _DOCVEC_KEYS}
    return VectorizerSpec(
        name=name,
        k=_int(obj, "k", where, 200, 1) if name == "bigram_top_k" else None,
        min_df=_int(obj, "min_df", where, 1, 1),
        max_features=_int(obj, "max_features", where, None, 1),
        table=_path(obj.get("table"), base),
        model=_path(obj.get("model"), base),
        docvec=params,
        infer_steps=_int(obj, "infer_steps", where, 20, 1),
    )


def _parse_balance(obj, seed) -> tuple[tuple[str, ...], SmoteParams]:
    if obj is None:
        return (), SmoteParams(seed=seed)
    if not isinstance(obj, list):
        raise ProtocolError("balance must be a list drawn from 'stratify', 'smote'")
    names, smote = set(), SmoteParams(seed=seed)
    for item in obj:
        if isinstance(item, dict):
            if set(item) != {"smote"}:
                raise ProtocolError(f"unknown balance entry {item!r}; valid: {', '.join(BALANCERS)}")
            params = dict(item["smote"] or {})
            _reject_unknown(params, ("k_neighbors", "target_ratio", "seed"), "balance.smote")
            try:
                smote = SmoteParams(**{"seed": seed, **params})
            except (DataError, TypeError) as e:
                raise ProtocolError(f"balance.smote: {e}") from e
            names.add("smote")
        elif item in BALANCERS:
            names.add(item)
        else:
            raise ProtocolError(f"unknown balance entry {item!r}; valid: {', '.join(BALANCERS)}")
    return tuple(sorted(names)), smote


def _parse_classifier(obj, seed) -> ClassifierSpec:
    if isinstance(obj, str):
        obj = {"algorithm": obj}
    if not isinstance(obj, dict) or "algorithm" not in obj:
        raise ProtocolError("classifier must be a name or an object with an 'algorithm'")
    _reject_unknown(obj, ("algorithm", "hyperparameters", "seed"), "classifier")
    try:
        return ClassifierSpec(obj["algorithm"], dict(obj.get("hyperparameters") or {}), int(obj.get("seed", seed)))
    except DataError as e:
        raise ProtocolError(str(e)) from e


def _parse_validation(obj) -> Validation:
    if obj is None:
        return Validation()
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ProtocolError("validation must be {\"kfold\": k} or {\"holdout\": [train, val, test]}")
    (kind, val), = obj.items()
    if kind == "kfold":
        if isinstance(val, bool) or not isinstance(val, int) or val < 2:
            raise ProtocolError("validation.kfold must be an integer >= 2")
        return Validation("kfold", val)
    if kind == "holdout":
        if not isinstance(val, list) or len(val) != 3 or any(not isinstance(x, (int, float)) or x <= 0 for x in val):
            raise ProtocolError("validation.holdout must list three positive fractions")
        if abs(sum(val) - 1.0) > 1e-9:
            raise ProtocolError("validation.holdout fractions must sum to 1")
        return Validation("holdout", fractions=tuple(float(x) for x in val))
    raise ProtocolError(f"unknown validation {kind!r}; valid: kfold, holdout")


_TOP_KEYS = ("desmine_protocol", "name", "seed", "preprocess", "vectorizer", "expansion",
             "balance", "classifier", "validation", "fit_features")


def from_dict(obj: dict, base_dir=None) -> ProtocolSpec:
    if not isinstance(obj, dict):
        raise ProtocolError("protocol must be a JSON object")
    _reject_unknown(obj, _TOP_KEYS, "protocol")
    if obj.get("desmine_protocol", VERSION) != VERSION:
        raise ProtocolError(f"unsupported desmine_protocol version {obj['desmine_protocol']!r}")
    if "seed" not in obj:
        raise ProtocolError("protocol is missing 'seed' (seeds are mandatory)")
    seed = _int(obj, "seed", "protocol", minimum=0)
    if "vectorizer" not in obj:
        raise ProtocolError("protocol is missing 'vectorizer'")
    if "classifier" not in obj:
        raise ProtocolError("protocol is missing 'classifier'")
    base = Path(base_dir) if base_dir is not None else None
    vectorizer = _parse_vectorizer(obj["vectorizer"], base)
    expansion = None
    if obj.get("expansion") is not None:
        e = obj["expansion"]
        if not isinstance(e, dict):
            raise ProtocolError("expansion must be an object")
        _reject_unknown(e, ("n", "tau", "table"), "expansion")
        tau = e.get("tau", 0.5)
        if not isinstance(tau, (int, float)) or not -1 <= tau <= 1:
            raise ProtocolError("expansion.tau must lie in [-1, 1]")
        expansion = Expansion(_int(e, "n", "expansion", 1, 1), float(tau), _path(e.get("table"), base))
        if expansion.table is None and vectorizer.table is None:
            raise ProtocolError("vocabulary expansion needs an embedding table (expansion.table or an embedding vectorizer)")
    balance, smote = _parse_balance(obj.get("balance"), seed)
    fit = obj.get("fit_features", "per_fold")
    if fit not in FIT_FEATURES:
        raise ProtocolError(f"unknown fit_features {fit!r}; valid: {', '.join(FIT_FEATURES)}")
    name = obj.get("name", "unnamed")
    if not isinstance(name, str):
        raise ProtocolError("protocol name must be a string")
    return ProtocolSpec(
        name=name,
        seed=seed,
        preprocess=_parse_preprocess(obj.get("preprocess"), base),
        vectorizer=vectorizer,
        expansion=expansion,
        balance=balance,
        smote=smote,
        classifier=_parse_classifier(obj["classifier"], seed),
        validation=_parse_validation(obj.get("validation")),
        fit_features=fit,
    )


def loads(text: str, base_dir=None) -> ProtocolSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"protocol is not valid JSON: {e.msg} (line {e.lineno})") from None
    return from_dict(obj, base_dir)


def parse(path) -> ProtocolSpec:
    path = Path(path)
    if not path.exists():
        raise ProtocolError(f"protocol file not found: {path}")
    return loads(path.read_text(encoding="utf-8"), path.parent)


def preset(name: str) -> ProtocolSpec:
    if name not in PRESETS:
        raise ProtocolError(f"unknown preset {name!r}; valid: {', '.join(PRESETS)}")
    text = (resources.files("desmine") / "data" / "presets" / f"{name}.json").read_text(encoding="utf-8")
    return loads(text, None)


def load(ref: str) -> ProtocolSpec:
    """A preset name or a protocol file path."""
    return preset(ref) if ref in PRESETS and not Path(ref).exists() else parse(ref)


def with_embeddings(spec: ProtocolSpec, path) -> ProtocolSpec:
    """Point every embedding-table reference of ``spec`` at ``path``."""
    path = str(Path(path).resolve())
    vec = spec.vectorizer
    if vec.name == "embedding_average":
        vec = replace(vec, table=path)
    exp = spec.expansion
    if exp is not None and exp.table is not None:
        exp = replace(exp, table=path)
    return replace(spec, vectorizer=vec, expansion=exp)


def _check_paths(spec: ProtocolSpec):
    for p in (spec.vectorizer.table, spec.vectorizer.model, spec.expansion.table if spec.expansion else None):
        if p is not None and "$" in p:
            raise ProtocolError(f"unresolved path {p!r}: set the environment variable or pass --embeddings")


# --------------------------------------------------------------------------- #
# execution

@dataclass
class ProtocolResult:
    spec: ProtocolSpec
    report: EvalReport
    provenance: dict
    validation_report: EvalReport | None = None

    def to_json(self, timestamps: bool = False) -> dict:
        prov = dict(self.provenance)
        if not timestamps:
            prov.pop("started_at", None)
            prov.pop("finished_at", None)
        out = {"spec": self.spec.to_json(), "report": self.report.to_json(), "provenance": prov}
        if self.validation_report is not None:
            out["validation_report"] = self.validation_report.to_json()
        return out

    def dumps(self, timestamps: bool = False) -> str:
        return json.dumps(self.to_json(timestamps), indent=2, sort_keys=True) + "\n"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def execute(spec: ProtocolSpec, dataset: Dataset) -> ProtocolResult:
    from . import pipeline

    _check_paths(spec)
    started = _now()
    val_report = None
    if spec.validation.kind == "kfold":
        report = cross_validate(spec, dataset, spec.validation.k, spec.seed)
    else:
        y = np.asarray(dataset.labels, dtype=np.int64)
        tr, va, te = stratified_holdout(y, spec.validation.fractions, spec.seed)
        if min(len(tr), len(va), len(te)) == 0:
            raise StageError("validate", DataError("holdout split produced an empty partition"))
        docs = pipeline.prepare(spec, dataset)
        fitted = pipeline.train(spec, docs, y, tr, fold=0,
                                features=pipeline.fit_features(spec, docs, np.arange(len(docs)))
                                if spec.fit_features == "global" else None)
        val_report = evaluate_scores(y[va], pipeline.score(fitted, docs, va), fitted.threshold)
        report = evaluate_scores(y[te], pipeline.score(fitted, docs, te), fitted.threshold)
    provenance = {
        "dataset": dataset.name,
        "n": len(dataset),
        "design": dataset.design_count,
        "seed": spec.seed,
        "desmine_version": __version__,
        "numpy_version": np.__version__,
        "started_at": started,
        "finished_at": _now(),
    }
    return ProtocolResult(spec, report, provenance, val_report)


# --------------------------------------------------------------------------- #
# DOT rendering

def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def stages(spec: ProtocolSpec) -> list[tuple[str, str]]:
    """(stage, label) pairs of the active stages in pipeline order."""
    pre = spec.preprocess
    flags = [f for f, on in (("lowercase", pre.lowercase), ("strip_html_and_code", pre.strip_html_and_code),
                             ("strip_punctuation", pre.strip_punctuation)) if on]
    out = [("source", "source: labeled discussions"),
           ("preprocess", "preprocess: " + (", ".join(flags) or "raw"))]
    if pre.stopword_set != "none":
        extra = f" (+{len(pre.domain_stopwords)} domain)" if pre.stopword_set == "english_plus_domain" else ""
        out.append(("stopwords", f"stopwords: {pre.stopword_set}{extra}"))
    vec = "vectorize: " + spec.vectorizer.label()
    if spec.expansion is not None:
        vec += f" + expansion(n={spec.expansion.n}, tau={spec.expansion.tau:g})"
    vec += f" [fit {spec.fit_features}]"
    out.append(("vectorize", vec))
    if spec.balance:
        parts = []
        for b in spec.balance:
            if b == "smote":
                parts.append(f"smote(k={spec.smote.k_neighbors}, ratio={spec.smote.target_ratio:g})")
            else:
                parts.append(b)
        out.append(("balance", "balance: " + " + ".join(parts)))
    hp = ", ".join(f"{k}={v}" for k, v in spec.classifier.hyperparameters.items())
    out.append(("classify", f"classify: {spec.classifier.algorithm}" + (f" ({hp})" if hp else "")))
    out.append(("validate", f"validate: {spec.validation.label()} seed={spec.seed}"))
    return out


def render_dot(spec: ProtocolSpec) -> str:
    nodes = stages(spec)
    digest = hashlib.sha256(spec.dumps().encode("utf-8")).hexdigest()
    lines = [f'digraph "{_esc(spec.name)}" {{', f"  // spec-sha256: {digest}", "  rankdir=LR;", "  node [shape=box, fontname=\"sans-serif\"];"]
    for stage, label in nodes:
        lines.append(f'  {stage} [label="{_esc(label)}"];')
    for (a, _), (b, _) in zip(nodes, nodes[1:]):
        lines.append(f"  {a} -> {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
