from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import pandas as pd


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temporary sibling file and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_frame(df: pd.DataFrame, path: str | Path) -> Path:
    return atomic_write_text(path, df.to_csv(index=False, lineterminator="\n"))


def write_json(doc: dict, path: str | Path) -> Path:
    return atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True, default=float) + "\n")


def save_run(out_dir: str | Path, tables: dict[str, pd.DataFrame] | None = None,
             documents: dict[str, dict] | None = None, texts: dict[str, str] | None = None) -> dict:
    """
    Write a batch of run artifacts under `out_dir` and return their paths by name.
    Tables go to `<name>.csv`, documents to `<name>.json`, texts (SVG/HTML) keep the name given.
    """
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, str] = {"run_dir": str(run_dir)}

    for name, df in (tables or {}).items():
        paths[name] = str(write_frame(df, run_dir / f"{name}.csv"))
    for name, doc in (documents or {}).items():
        paths[name] = str(write_json(doc, run_dir / f"{name}.json"))
    for name, text in (texts or {}).items():
        paths[name] = str(atomic_write_text(run_dir / name, text))
    return paths
