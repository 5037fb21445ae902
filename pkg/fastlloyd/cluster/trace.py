"""Per-iteration centroid trajectory recorder (CSV)."""

from __future__ import annotations

import csv
from pathlib import Path

from fastlloyd.core.types import CentroidState


class TrajectoryRecorder:
    """Collects centroid states; ``write`` emits iteration,cluster,x0..x{d-1} rows."""

    def __init__(self) -> None:
        self.states: list[CentroidState] = []

    def record(self, state: CentroidState) -> None:
        self.states.append(state)

    def rows(self) -> list[list[float | int]]:
        out: list[list[float | int]] = []
        for state in self.states:
            for j, centroid in enumerate(state.centroids):
                out.append([state.iteration, j, *(float(x) for x in centroid)])
        return out

    def write(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        d = self.states[0].d if self.states else 0
        with target.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "cluster", *(f"x{i}" for i in range(d))])
            writer.writerows(self.rows())
        return target
