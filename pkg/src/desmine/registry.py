"""Where the published datasets and embedding tables are expected on disk."""

from __future__ import annotations

import json
import os
from functools import lru_cache
from importlib import resources
from pathlib import Path

# short name -> file stem under $DESMINE_DATA_DIR
DATASETS = {
    "brunet": "brunet2014",
    "shakiba": "shakiba2016",
    "viviani": "viviani2018",
    "satd": "satd",
    "stackoverflow": "stackoverflow",
}


def data_dir() -> Path | None:
    root = os.environ.get("DESMINE_DATA_DIR")
    return Path(root) if root else None


def locate(name: str, root: Path | None = None) -> Path | None:
    """Path of dataset ``name`` (.jsonl preferred over .csv), or None."""
    root = root or data_dir()
    if root is None:
        return None
    stem = DATASETS.get(name, name)
    for ext in (".jsonl", ".csv"):
        p = root / f"{stem}{ext}"
        if p.exists():
            return p
    return None


def embeddings_path(root: Path | None = None) -> Path | None:
    env = os.environ.get("DESMINE_EMBEDDINGS")
    if env and Path(env).exists():
        return Path(env)
    root = root or data_dir()
    if root is not None and (root / "embeddings.vec").exists():
        return root / "embeddings.vec"
    return None


@lru_cache(maxsize=1)
def references() -> dict:
    return json.loads((resources.files("desmine") / "data" / "references.json").read_text(encoding="utf-8"))
