"""CSV ingestion and export with an optional ground-truth label column."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np
import numpy.typing as npt

from fastlloyd.core.exceptions import InvalidInputError
from fastlloyd.core.types import Dataset

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"


def _is_numeric(row: list[str]) -> bool:
    try:
        [float(cell) for cell in row]
    except ValueError:
        return False
    return True


def load_csv(path: str | Path) -> tuple[Dataset, npt.NDArray[np.int64] | None]:
    """Read points (and labels, when a ``label`` header column is present)."""
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"dataset not found: {source}")
    with source.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise InvalidInputError(f"{source} holds no rows")

    header: list[str] | None = None
    if not _is_numeric(rows[0]):
        header = [cell.strip().lower() for cell in rows[0]]
        rows = rows[1:]
    if not rows:
        raise InvalidInputError(f"{source} holds a header but no data")

    try:
        values = np.array([[float(cell) for cell in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise InvalidInputError(f"{source}: non-numeric cell: {exc}") from exc

    labels = None
    if header is not None and LABEL_COLUMN in header:
        col = header.index(LABEL_COLUMN)
        labels = values[:, col].astype(np.int64)
        values = np.delete(values, col, axis=1)
    logger.info("Loaded %d points of dimension %d from %s", *values.shape, source)
    return Dataset(values), labels


def write_csv(path: str | Path, data: Dataset, labels: npt.ArrayLike | None = None) -> Path:
    """Header x0..x{d-1}[,label], one point per row, full float precision."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    header = [f"x{i}" for i in range(data.d)]
    label_values = None
    if labels is not None:
        label_values = np.asarray(labels, dtype=np.int64)
        if label_values.shape != (data.n,):
            raise InvalidInputError("labels must hold one entry per point")
        header.append(LABEL_COLUMN)
    with target.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, point in enumerate(data.points):
            row = [repr(float(x)) for x in point]
            if label_values is not None:
                row.append(str(int(label_values[i])))
            writer.writerow(row)
    return target
