"""CSV tables and P2 PGM snapshots.

CSV: comma separated, one header row, ``.`` decimals, ``\\n`` line ends,
floats written with ``repr`` so values read back bit-identical.
PGM: plain (P2) graymap, maxval 255, cooperators white (255), defectors
black (0), one pixel per cell.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError
from .lattice import Lattice

PGM_MAXVAL = 255


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "nan" if math.isnan(value) else repr(value)
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidInputError(f"{path}: empty CSV file")
    return rows[0], rows[1:]


def read_columns(path, *names: str) -> list[np.ndarray]:
    """Named float columns from a CSV with a header row."""
    header, rows = read_csv(path)
    missing = [n for n in names if n not in header]
    if missing:
        raise InvalidInputError(f"{path}: missing column(s) {', '.join(missing)}; header is {header}")
    out = []
    for name in names:
        i = header.index(name)
        try:
            out.append(np.array([float(r[i]) for r in rows if r]))
        except ValueError as exc:
            raise InvalidInputError(f"{path}: non-numeric value in column {name!r}: {exc}") from None
    return out


def write_pgm(path, lattice: Lattice) -> Path:
    path = Path(path)
    grid = lattice.grid.astype(int) * PGM_MAXVAL
    lines = ["P2", f"{lattice.side} {lattice.side}", str(PGM_MAXVAL)]
    lines += [" ".join(map(str, row)) for row in grid]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_pgm(path) -> Lattice:
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens += line.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise InvalidInputError(f"{path}: not a plain P2 graymap")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if width != height:
        raise InvalidInputError(f"{path}: lattice snapshots are square, got {width}x{height}")
    values = np.array(tokens[4:], dtype=int)
    if values.size != width * height:
        raise InvalidInputError(f"{path}: expected {width * height} pixels, got {values.size}")
    return Lattice(width, (values * 2 > maxval).astype(np.uint8))
