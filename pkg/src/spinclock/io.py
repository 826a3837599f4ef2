"""Deterministic text output: fixed float formatting, CSV and run manifests."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

SIG_DIGITS = 12


def fmt(x) -> str:
    """12 significant digits; integers and strings pass through."""
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, (int, str)):
        return str(x)
    if isinstance(x, float):
        v = f"{x:.{SIG_DIGITS}g}"
        return "0" if v == "-0" else v
    if isinstance(x, complex):
        return f"{fmt(x.real)}{'+' if x.imag >= 0 else '-'}{fmt(abs(x.imag))}j"
    try:
        return fmt(float(x))
    except (TypeError, ValueError):
        return str(x)


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def complex_matrix_record(m) -> dict:
    import numpy as np

    m = np.asarray(m, dtype=complex)
    return dict(shape=list(m.shape), real=[[float(fmt(v)) for v in row] for row in m.real.reshape(m.shape[0], -1)],
                imag=[[float(fmt(v)) for v in row] for row in m.imag.reshape(m.shape[0], -1)])


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    version: str = ""
    outputs: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.version:
            from . import __version__

            self.version = __version__

    def add(self, path: str | os.PathLike) -> None:
        self.outputs.append(str(path))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str)

    def write(self, directory: str | os.PathLike) -> Path:
        p = Path(directory) / f"{self.command}_manifest.json"
        self.outputs = sorted(set(self.outputs))
        return write_text(p, self.to_json() + "\n")
