"""CSV file formats: fields, diagnostics and residual time series.

Field CSV: header ``re,im`` followed by one row per grid point in row-major
order (last axis fastest), ``N^dim`` rows in total.

All floats are written with 17 significant digits and ``\\n`` line endings so
identical runs produce identical files. Writes go to a temporary file in the
target directory and are renamed into place.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .grid import Grid, as_field


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def render_csv(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_field_csv(path: Path, u: np.ndarray) -> Path:
    flat = np.asarray(u, dtype=complex).ravel()
    return atomic_write(path, render_csv(("re", "im"), zip(flat.real, flat.imag)))


def read_field_csv(path: Path, grid: Grid) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["re", "im"]:
        raise ConfigError(f"{path}: expected header 're,im'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed row ({exc})") from exc
    if data.shape[0] != grid.size:
        raise ConfigError(f"{path}: {data.shape[0]} rows, grid needs {grid.size}")
    return as_field(grid, data[:, 0] + 1j * data[:, 1])


def diagnostics_header(dim: int) -> list[str]:
    return (
        ["t", "charge", "kinetic", "potential_int", "energy"]
        + [f"momentum_{j + 1}" for j in range(dim)]
        + ["variance", "cross", "grad_norm2", "W_int", "J_norm2", "boundary_mass"]
    )


def diagnostics_rows(samples) -> list[list[float]]:
    return [
        [s.t, s.charge, s.kinetic, s.potential_int, s.energy, *s.momentum,
         s.variance, s.cross, s.grad_norm2, s.W_int, s.J_norm2, s.boundary_mass]
        for s in samples
    ]


def write_diagnostics_csv(path: Path, samples, dim: int) -> Path:
    return atomic_write(path, render_csv(diagnostics_header(dim), diagnostics_rows(samples)))


def write_residual_csv(path: Path, times, columns: dict[str, np.ndarray]) -> Path:
    names = list(columns)
    rows = [[t, *(columns[n][i] for n in names)] for i, t in enumerate(times)]
    return atomic_write(path, render_csv(["t", *names], rows))


def read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return {h: data[:, i] for i, h in enumerate(header)}
