"""Seeded surrogate corpora for running experiments without the published datasets.

Each surrogate dataset mixes three kinds of vocabulary: design terms shared
by every dataset, design terms particular to one dataset, and filler. A
companion embedding table places words of the same group near each other.
Sizes and prevalences follow the dataset characterization table, with the
two largest corpora scaled down. These are NOT the real datasets; results on
them only exercise the machinery.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Dataset, Discussion, dump_jsonl
from .vectorize import EmbeddingTable, write_embeddings


@dataclass(frozen=True)
class Profile:
    name: str
    artifact_kind: str
    total: int
    design: int
    mean_length: float


# Brunet / Shakiba at full size; Viviani, SATD and StackOverflow scaled down.
PROFILES = (
    Profile("brunet2014", "pull_request", 1000, 224, 17.0),
    Profile("shakiba2016", "commit_message", 2000, 279, 7.4),
    Profile("viviani2018", "pull_request", 1500, 703, 36.0),
    Profile("satd", "code_comment", 2000, 87, 30.0),
    Profile("stackoverflow", "qa_post", 2000, 1038, 60.0),
)

SHARED_DESIGN = (
    "class interface abstraction dependency module coupling cohesion pattern refactor "
    "architecture layer component api encapsulation inheritance composition factory "
    "singleton observer adapter facade responsibility boundary contract structure"
).split()

FILLER = (
    "the value test fix bug error build run file line version update change issue "
    "thanks merge commit branch release config log output input check add remove "
    "work need time case type string number list return call data user"
).split()

_SYLLABLES = "ka lo mi nu pe ra si to vu xe za bo du fi gu ho ji ke".split()


def _words(rng, prefix: str, n: int) -> list[str]:
    out = []
    while len(out) < n:
        w = prefix + "".join(rng.choice(_SYLLABLES, size=2))
        if w not in out:
            out.append(w)
    return out


@dataclass
class Suite:
    datasets: list[Dataset]
    embeddings: EmbeddingTable


def make_suite(seed: int = 0, profiles=PROFILES, dim: int = 50,
               shared_rate: float = 0.06, specific_rate: float = 0.12,
               leak_rate: float = 0.02, label_noise: float = 0.05) -> Suite:
    """Generate one surrogate dataset per profile plus an embedding table.

    ``shared_rate`` / ``specific_rate`` are per-token probabilities of drawing
    a shared / dataset-specific design word in a design discussion;
    non-design discussions draw each at ``leak_rate``.
    """
    rng = np.random.default_rng(seed)
    groups: dict[str, list[str]] = {"shared": list(SHARED_DESIGN), "filler": list(FILLER)}
    for i, p in enumerate(profiles):
        groups[f"{p.name}:design"] = _words(rng, f"d{i}", 25)
        groups[f"{p.name}:filler"] = _words(rng, f"f{i}", 60)

    shared = np.array(groups["shared"])
    datasets = []
    for p in profiles:
        spec_design = np.array(groups[f"{p.name}:design"])
        filler = np.array(groups["filler"] + groups[f"{p.name}:filler"])
        labels = np.zeros(p.total, dtype=np.int64)
        labels[rng.choice(p.total, size=p.design, replace=False)] = 1
        rows = []
        for j, lab in enumerate(labels):
            # a small share of discussions look like the other class
            looks_design = lab if rng.random() >= label_noise else 1 - lab
            n = max(2, int(rng.poisson(p.mean_length)))
            rs, rp = (shared_rate, specific_rate) if looks_design else (leak_rate, leak_rate)
            u = rng.random(n)
            toks = np.where(u < rs, shared[rng.integers(len(shared), size=n)],
                            np.where(u < rs + rp, spec_design[rng.integers(len(spec_design), size=n)],
                                     filler[rng.integers(len(filler), size=n)]))
            rows.append(Discussion(f"{p.name}-{j:05d}", " ".join(toks), int(lab), p.name, p.artifact_kind))
        datasets.append(Dataset(p.name, tuple(rows)))

    centroids = {g: rng.normal(size=dim) for g in groups}
    tokens, vecs, seen = [], [], set()
    for g in sorted(groups):
        for w in groups[g]:
            if w in seen:
                continue
            seen.add(w)
            tokens.append(w)
            vecs.append(centroids[g] + 0.8 * rng.normal(size=dim))
    return Suite(datasets, EmbeddingTable(tokens, np.array(vecs)))


def balanced_corpus(n: int = 4000, seed: int = 0, mean_length: float = 40.0) -> Dataset:
    """Balanced two-class corpus in the style of the Q&A surrogate."""
    profile = Profile("stackoverflow-balanced", "qa_post", n, n // 2, mean_length)
    return make_suite(seed, profiles=(profile,)).datasets[0]


def write_suite(suite: Suite, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for d in suite.datasets:
        path = out_dir / f"{d.name}.jsonl"
        dump_jsonl(d, path)
        paths.append(path)
    emb = out_dir / "embeddings.vec"
    write_embeddings(suite.embeddings, emb)
    paths.append(emb)
    return paths
