"""Loading, cleaning, tokenizing and characterizing labeled discussion datasets."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

ARTIFACT_KINDS = ("pull_request", "commit_message", "code_comment", "qa_post", "chat", "other")
STOPWORD_SETS = ("none", "english", "english_plus_domain")


@dataclass(frozen=True)
class Discussion:
    id: str
    text: str
    label: int
    source: str
    artifact_kind: str = "other"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "label": self.label,
            "source": self.source,
            "artifact_kind": self.artifact_kind,
        }


@dataclass(frozen=True)
class Dataset:
    name: str
    discussions: tuple[Discussion, ...] = ()

    def __len__(self):
        return len(self.discussions)

    @property
    def labels(self) -> list[int]:
        return [d.label for d in self.discussions]

    @property
    def texts(self) -> list[str]:
        return [d.text for d in self.discussions]

    @property
    def design_count(self) -> int:
        return sum(d.label for d in self.discussions)

    @property
    def prevalence_fraction(self) -> Fraction:
        if not self.discussions:
            raise DataError(f"dataset '{self.name}' is empty; prevalence is undefined")
        return Fraction(self.design_count, len(self.discussions))

    @property
    def prevalence(self) -> float:
        return float(self.prevalence_fraction)

    def subset(self, indices: Iterable[int], name: str | None = None) -> "Dataset":
        return Dataset(name or self.name, tuple(self.discussions[i] for i in indices))


@dataclass(frozen=True)
class CorpusStats:
    total: int
    design: int
    mean_length: float
    vocab_size: int

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "design": self.design,
            "mean_length": self.mean_length,
            "vocab_size": self.vocab_size,
        }


@dataclass(frozen=True)
class CleanOptions:
    lowercase: bool = True
    strip_html_and_code: bool = True
    strip_punctuation: bool = True
    stopword_set: str = "english"
    domain_stopwords: tuple[str, ...] = field(default_factory=lambda: default_domain_stopwords())

    def __post_init__(self):
        if self.stopword_set not in STOPWORD_SETS:
            raise DataError(f"unknown stopword_set {self.stopword_set!r}; valid: {', '.join(STOPWORD_SETS)}")
        object.__setattr__(self, "domain_stopwords", tuple(self.domain_stopwords))

    def stop_set(self) -> frozenset[str]:
        if self.stopword_set == "none":
            return frozenset()
        words = set(english_stopwords())
        if self.stopword_set == "english_plus_domain":
            words.update(self.domain_stopwords)
        return frozenset(words)

    def to_json(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "strip_html_and_code": self.strip_html_and_code,
            "strip_punctuation": self.strip_punctuation,
            "stopword_set": self.stopword_set,
            "domain_stopwords": list(self.domain_stopwords),
        }


# --------------------------------------------------------------------------- #
# Stop lists

def read_stopword_file(path) -> tuple[str, ...]:
    """One token per line; blank lines and ``#`` comments ignored."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                words.append(line)
    return tuple(words)


@lru_cache(maxsize=None)
def _packaged_stopwords(name: str) -> tuple[str, ...]:
    with resources.as_file(resources.files("desmine") / "data" / name) as p:
        return read_stopword_file(p)


def english_stopwords() -> tuple[str, ...]:
    return _packaged_stopwords("english_stopwords.txt")


def default_domain_stopwords() -> tuple[str, ...]:
    return _packaged_stopwords("domain_stopwords.txt")


# --------------------------------------------------------------------------- #
# Loading

def _check_label(raw, where: str) -> int:
    if isinstance(raw, bool) or raw not in (0, 1):
        raise DataError(f"{where}: label must be 0 or 1, got {raw!r}")
    return int(raw)


def _build(name: str, rows: Iterable[Discussion]) -> Dataset:
    seen = set()
    out = []
    for d in rows:
        if d.id in seen:
            raise DataError(f"duplicate id {d.id!r} in dataset '{name}'")
        seen.add(d.id)
        out.append(d)
    return Dataset(name, tuple(out))


def load_jsonl(path, name: str | None = None) -> Dataset:
    path = Path(path)
    name = name or path.stem

    def rows():
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                where = f"{path.name}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DataError(f"{where}: malformed JSON ({e.msg})") from None
                if not isinstance(obj, dict):
                    raise DataError(f"{where}: expected a JSON object")
                missing = [k for k in ("id", "text", "label", "source") if k not in obj]
                if missing:
                    raise DataError(f"{where}: missing keys {missing}")
                text = obj["text"]
                if not isinstance(text, str) or not text.strip():
                    raise DataError(f"{where}: empty text")
                kind = obj.get("artifact_kind", "other")
                if kind not in ARTIFACT_KINDS:
                    raise DataError(f"{where}: unknown artifact_kind {kind!r}")
                yield Discussion(str(obj["id"]), text, _check_label(obj["label"], where), str(obj["source"]), kind)

    return _build(name, rows())


def dump_jsonl(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in dataset.discussions:
            fh.write(json.dumps(d.to_json(), ensure_ascii=False) + "\n")


_LABEL_WORDS = {"0": 0, "1": 1, "design": 1, "non-design": 0, "nondesign": 0, "non_design": 0}


def load_csv(path, text_col: str = "text", label_col: str = "label", id_col: str = "id",
             name: str | None = None) -> Dataset:
    path = Path(path)
    name = name or path.stem
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (text_col, label_col):
            if col not in header:
                raise DataError(f"{path.name}: column not found: {col!r}")
        has_id = id_col in header
        rows = []
        for rowno, row in enumerate(reader, 1):
            raw = (row[label_col] or "").strip().lower()
            if raw not in _LABEL_WORDS:
                raise DataError(f"{path.name}: row {rowno}: unparseable label {row[label_col]!r}")
            text = row[text_col] or ""
            if not text.strip():
                raise DataError(f"{path.name}: row {rowno}: empty text")
            kind = (row.get("artifact_kind") or "other").strip() or "other"
            if kind not in ARTIFACT_KINDS:
                raise DataError(f"{path.name}: row {rowno}: unknown artifact_kind {kind!r}")
            rows.append(Discussion(
                id=row[id_col] if has_id else str(rowno),
                text=text,
                label=_LABEL_WORDS[raw],
                source=(row.get("source") or name),
                artifact_kind=kind,
            ))
    return _build(name, rows)


def load_dataset(path, fmt: str | None = None, **csv_kwargs) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "jsonl")
    if fmt == "csv":
        return load_csv(path, **csv_kwargs)
    if fmt == "jsonl":
        return load_jsonl(path)
    raise DataError(f"unknown dataset format {fmt!r}")


# --------------------------------------------------------------------------- #
# Text processing

_CODE_BLOCK = re.compile(r"<code\b[^>]*>.*?</code\s*>", re.IGNORECASE | re.DOTALL)
_TAG = re.compile(r"<[^>]*>")
_ENTITY = re.compile(r"&#?\w+;")
_PUNCT = re.compile(r"[^\w\s]|_")
_SPACE = re.compile(r"\s+")


def _clean_once(text: str, opts: CleanOptions) -> str:
    if opts.strip_html_and_code:
        text = _CODE_BLOCK.sub(" ", text)
        text = _TAG.sub(" ", text)
        text = _ENTITY.sub(" ", text)
    if opts.lowercase:
        text = text.lower()
    if opts.strip_punctuation:
        text = _PUNCT.sub(" ", text)
    return _SPACE.sub(" ", text).strip()


def clean(text: str, opts: CleanOptions | None = None) -> str:
    opts = opts or CleanOptions()
    # Removing one tag can expose another ("<<b>b>"); iterate to a fixed point.
    for _ in range(16):
        out = _clean_once(text, opts)
        if out == text:
            break
        text = out
    return text


def tokenize(text: str) -> list[str]:
    return text.split()


def remove_stopwords(tokens: Sequence[str], opts: CleanOptions | None = None) -> list[str]:
    stop = (opts or CleanOptions()).stop_set()
    return [t for t in tokens if t not in stop]


def preprocess(text: str, opts: CleanOptions | None = None) -> list[str]:
    """clean -> tokenize -> remove_stopwords."""
    opts = opts or CleanOptions()
    return remove_stopwords(tokenize(clean(text, opts)), opts)


def stats(dataset: Dataset, opts: CleanOptions | None = None) -> CorpusStats:
    # Table-style word counts are taken before stop-word removal.
    if not dataset.discussions:
        raise DataError(f"dataset '{dataset.name}' is empty")
    opts = opts or CleanOptions()
    vocab = set()
    n_tokens = 0
    for d in dataset.discussions:
        toks = tokenize(clean(d.text, opts))
        n_tokens += len(toks)
        vocab.update(toks)
    return CorpusStats(
        total=len(dataset),
        design=dataset.design_count,
        mean_length=n_tokens / len(dataset),
        vocab_size=len(vocab),
    )
