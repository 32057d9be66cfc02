"""CSV readers and writers for datasets and ground-truth graphs."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .dag_space import CycleError, Dag
from .scoring import ObservationDataset


class DataFormatError(ValueError):
    pass


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]


def _parse_float(cell, row, col):
    try:
        value = float(cell)
    except ValueError:
        raise DataFormatError(f"row {row}, column {col}: cannot parse {cell!r} as a number") from None
    if not math.isfinite(value):
        raise DataFormatError(f"row {row}, column {col}: non-finite value {cell!r}")
    return value


def _is_numeric(cells):
    try:
        [float(c) for c in cells]
    except ValueError:
        return False
    return True


def load_dataset(path) -> ObservationDataset:
    """Comma-separated decimals with an optional header row of column names."""
    rows = _read_rows(path)
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    names = None
    start = 0
    if not _is_numeric(rows[0]):
        names = [c.strip() for c in rows[0]]
        start = 1
    if start >= len(rows):
        raise DataFormatError(f"{path}: no data rows")
    width = len(names) if names else len(rows[start])
    values = []
    for r in range(start, len(rows)):
        row = rows[r]
        if len(row) != width:
            raise DataFormatError(f"row {r}: expected {width} fields, found {len(row)}")
        values.append([_parse_float(c, r, k) for k, c in enumerate(row)])
    return ObservationDataset(np.array(values, dtype=np.float64), names)


def load_truth(path, d: int) -> Dag:
    """Edge list (rows ``i,j``) or a ``d x d`` 0/1 adjacency matrix."""
    rows = [[c.strip() for c in row] for row in _read_rows(path)]
    if rows and not _is_numeric(rows[0]):
        rows = rows[1:]
    if not rows:
        return Dag(d)
    ints = []
    for r, row in enumerate(rows):
        try:
            ints.append([int(float(c)) for c in row])
        except ValueError:
            raise DataFormatError(f"row {r}: non-integer entry in {row}") from None
    try:
        if len(ints) == d and all(len(row) == d for row in ints):
            mat = np.array(ints)
            if not np.isin(mat, (0, 1)).all():
                raise DataFormatError("adjacency matrix entries must be 0 or 1")
            return Dag.from_matrix(mat.astype(bool))
        if any(len(row) != 2 for row in ints):
            raise DataFormatError("truth file is neither an edge list nor a d x d matrix")
        return Dag(d, [tuple(row) for row in ints])
    except CycleError as exc:
        raise DataFormatError(f"{path}: ground truth is not acyclic ({exc})") from None


def write_dataset(path, dataset: ObservationDataset) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.column_names)
        for row in dataset.data:
            writer.writerow([repr(float(v)) for v in row])


def write_edge_list(path, dag: Dag) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for i, j in dag.edges:
            writer.writerow([i, j])


def ensure_parent(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
