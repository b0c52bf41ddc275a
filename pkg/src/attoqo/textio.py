"""Plain-text output helpers shared by the library and the CLI."""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Sequence

import numpy as np


def format_csv(names: Sequence[str], columns: Sequence[np.ndarray], comments: Sequence[str] = ()) -> str:
    """Comma-separated table with a ``#``-prefixed header line naming the columns."""
    cols = [np.asarray(c) for c in columns]
    n = cols[0].shape[0] if cols else 0
    if any(c.shape[0] != n for c in cols):
        raise ValueError("columns differ in length")
    lines = [f"# {c}" for c in comments]
    lines.append("# " + ",".join(names))
    for i in range(n):
        row = []
        for c in cols:
            v = c[i]
            if isinstance(v, (np.integer, int)):
                row.append(str(int(v)))
            else:
                row.append(f"{float(v):.12e}")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def read_csv(text: str) -> tuple[list[str], np.ndarray]:
    names: list[str] = []
    rows = []
    for ln in text.splitlines():
        if ln.startswith("#"):
            names = [s.strip() for s in ln[1:].split(",")]
            continue
        if ln.strip():
            rows.append([float(x) for x in ln.split(",")])
    return names, np.array(rows)


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()
