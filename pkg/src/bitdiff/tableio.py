"""CSV ingestion, atomic file writes, run manifests, and output-dir locking."""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from .checkpoint import file_sha256


def load_csv(path: str | Path) -> pd.DataFrame:
    """Load an RFC-4180 CSV with a header row as raw strings; empty cells are errors later."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"data file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.ParserError as exc:
        raise ValueError(f"malformed CSV {path}: {exc}") from None
    if frame.shape[1] == 0 or frame.shape[0] == 0:
        raise ValueError(f"{path}: empty table")
    return frame


def write_csv_atomic(frame: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    frame.to_csv(tmp, index=False)
    os.replace(tmp, path)
    return path


def write_json_atomic(doc: dict, path: str | Path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: dict,
    seeds: dict,
    inputs: dict[str, str | Path],
) -> Path:
    """Record everything needed to reproduce the run: config, seeds, input hashes."""
    hashes = {name: file_sha256(p) for name, p in inputs.items() if p and Path(p).exists()}
    doc = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "input_sha256": hashes,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    return write_json_atomic(doc, Path(out_dir) / "manifest.json")


@contextmanager
def run_lock(out_dir: str | Path):
    """One run owns its output directory; a stale LOCK file means another run is active."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / "LOCK"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(f"output directory {out_dir} is locked by another run (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out_dir
    finally:
        lock.unlink(missing_ok=True)
