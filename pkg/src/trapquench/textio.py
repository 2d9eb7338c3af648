"""Deterministic delimited-text output."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.11e"  # 12 significant digits


def fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop the sign of negative zero
    return FLOAT_FMT % x


def write_columns(path, names, columns, header: str = "") -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [f"# {h}" for h in header.splitlines() if h] if header else []
    lines.append("# " + " ".join(names))
    for row in zip(*cols):
        lines.append(" ".join(fmt(v) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def read_columns(path) -> np.ndarray:
    return np.loadtxt(path, comments="#", ndmin=2)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
