"""Run reports: utility, timing and byte accounting for one protocol execution."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from fastlloyd.dpcalib.accountant import NoisePlan

# Fields that vary between otherwise identical runs (timings, transport wiring).
TIMING_FIELDS = {"iter_ms", "iter_ms_mean", "transport"}
_VOLATILE = {**{name: True for name in TIMING_FIELDS}, "config": {"transport": True}}


def closed_form_bytes(clients: int, k: int, d: int, w: int) -> int:
    """Payload bytes per iteration: M clients up and down, k x (d + 1) words each way."""
    return 2 * clients * k * (d + 1) * w // 8


class RunReport(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    algo: str
    seed: int
    transport: str = "loopback"
    T: int
    epsilon: float
    delta: float
    nicv: float | None = None
    centroids: list[list[float]]
    noise_plan: NoisePlan
    iter_ms: list[float] = Field(default_factory=list)
    iter_ms_mean: float = 0.0
    bytes_up_per_client: int = 0
    bytes_down_per_client: int = 0
    bytes_per_iter: int = 0
    wire_bytes_per_iter: int = 0
    rounds_per_iter: float = 0.0
    config: dict[str, Any] = Field(default_factory=dict)

    def deterministic_view(self) -> dict[str, Any]:
        """Everything except wall-clock measurements and the transport label."""
        return self.model_dump(mode="json", exclude=_VOLATILE)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def write_report(report: RunReport, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json() + "\n")
    return out


def load_report(path: str | Path) -> RunReport:
    return RunReport.model_validate_json(Path(path).read_text())
