"""Repeated-run sweeps over (algorithm, epsilon) with confidence intervals and AUC."""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy import stats

from fastlloyd.baselines.runners import run_algorithm
from fastlloyd.config.models import AlgorithmKind, ExecutionMode, ProtocolParams
from fastlloyd.core.dataset import partition_dataset
from fastlloyd.core.rng import SeededRng, StreamKind
from fastlloyd.core.types import Dataset
from fastlloyd.eval.metrics import auc

logger = logging.getLogger(__name__)

Z_95 = 1.96
MIN_RUNS_FOR_CI = 30
_ALGO_ORDER = list(AlgorithmKind)


@dataclass(frozen=True)
class SweepRow:
    algo: str
    eps: float
    run: int
    nicv: float
    iter_ms_mean: float
    bytes_per_iter: int
    T: int
    sigma: float | None
    seed: int


@dataclass(frozen=True)
class SummaryRow:
    algo: str
    eps: float | None  # None on the AUC row
    runs: int
    nicv_mean: float | None = None
    ci_half_width: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    indicative: bool = False
    rel_to_lloyd: float | None = None
    auc: float | None = None


@dataclass(frozen=True)
class _Cell:
    algo: AlgorithmKind
    algo_index: int
    eps: float
    eps_index: int
    run: int


def cell_noise_seed(run_seed: int, algo_index: int, eps_index: int) -> int:
    """Server noise seed for one sweep cell, independent of every protocol stream."""
    gen = SeededRng(run_seed).generator(StreamKind.SWEEP, algo_index, eps_index)
    return int(gen.integers(0, 2**63))


def _run_cell(
    cell: _Cell,
    params: ProtocolParams,
    dataset: Dataset,
    mode: ExecutionMode,
) -> SweepRow:
    run_seed = params.seed + cell.run
    cell_params = params.model_copy(update={"seed": run_seed, "epsilon": cell.eps})
    shards = partition_dataset(dataset, cell_params.clients, SeededRng(run_seed))
    result = run_algorithm(
        cell.algo,
        cell_params,
        shards,
        mode=mode,
        noise_seed=cell_noise_seed(run_seed, cell.algo_index, cell.eps_index),
        evaluation=dataset,
    )
    report = result.report
    return SweepRow(
        algo=cell.algo.value,
        eps=cell.eps,
        run=cell.run,
        nicv=float(report.nicv),
        iter_ms_mean=report.iter_ms_mean,
        bytes_per_iter=report.bytes_per_iter,
        T=report.T,
        sigma=report.noise_plan.sigma,
        seed=run_seed,
    )


def sweep(
    params: ProtocolParams,
    dataset: Dataset,
    algos: Sequence[AlgorithmKind | str],
    eps_grid: Sequence[float],
    runs: int,
    mode: ExecutionMode | str = ExecutionMode.CENTRAL,
    workers: int = 1,
) -> list[SweepRow]:
    """One row per (algo, eps, run); run r uses seed = base seed + r for init and partition."""
    kinds = [AlgorithmKind(a) for a in algos]
    cells = [
        _Cell(kind, _ALGO_ORDER.index(kind), eps, i, run)
        for run in range(runs)
        for kind in kinds
        for i, eps in enumerate(eps_grid)
    ]
    mode = ExecutionMode(mode)
    logger.info(
        "Sweep: %d algos x %d eps x %d runs (%s, %d workers)",
        len(kinds),
        len(eps_grid),
        runs,
        mode.value,
        workers,
    )
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="sweep") as pool:
            rows = list(pool.map(lambda c: _run_cell(c, params, dataset, mode), cells))
    else:
        rows = [_run_cell(cell, params, dataset, mode) for cell in cells]
    return sorted(rows, key=lambda r: (r.algo, r.eps, r.run))


def confidence_interval(values: Sequence[float]) -> tuple[float, float]:
    """(mean, half width) with the normal approximation mean +/- 1.96 s / sqrt(n)."""
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(Z_95 * stats.sem(arr, ddof=1))


def summarize(rows: Iterable[SweepRow]) -> list[SummaryRow]:
    """Mean and 95% CI per (algo, eps), relative NICV vs Lloyd, and one AUC row per algo."""
    grouped: dict[tuple[str, float], list[float]] = defaultdict(list)
    for row in rows:
        grouped[(row.algo, row.eps)].append(row.nicv)

    means = {key: float(np.mean(values)) for key, values in grouped.items()}
    summary: list[SummaryRow] = []
    for algo in sorted({key[0] for key in grouped}):
        curve: list[tuple[float, float]] = []
        runs = 0
        for eps in sorted(e for a, e in grouped if a == algo):
            values = grouped[(algo, eps)]
            mean, half = confidence_interval(values)
            lloyd = means.get((AlgorithmKind.LLOYD.value, eps))
            runs = len(values)
            summary.append(
                SummaryRow(
                    algo=algo,
                    eps=eps,
                    runs=runs,
                    nicv_mean=mean,
                    ci_half_width=half,
                    ci_low=mean - half,
                    ci_high=mean + half,
                    indicative=runs < MIN_RUNS_FOR_CI,
                    rel_to_lloyd=mean / lloyd if lloyd else None,
                )
            )
            curve.append((eps, mean))
        if len(curve) >= 2:
            summary.append(SummaryRow(algo=algo, eps=None, runs=runs, auc=auc(curve)))
    return summary


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(path: str | Path, rows: Sequence, kind: type) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    names = [f.name for f in fields(kind)]
    with target.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=names)
        writer.writeheader()
        for row in rows:
            writer.writerow({name: _cell(value) for name, value in asdict(row).items()})
    return target


def format_rows(rows: Sequence, kind: type) -> str:
    names = [f.name for f in fields(kind)]
    lines = [",".join(names)]
    lines.extend(",".join(_cell(getattr(row, n)) for n in names) for row in rows)
    return "\n".join(lines)


def _optional_float(text: str) -> float | None:
    return float(text) if text != "" else None


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    with Path(path).open(newline="") as fh:
        return [
            SweepRow(
                algo=rec["algo"],
                eps=float(rec["eps"]),
                run=int(rec["run"]),
                nicv=float(rec["nicv"]),
                iter_ms_mean=float(rec["iter_ms_mean"]),
                bytes_per_iter=int(rec["bytes_per_iter"]),
                T=int(rec["T"]),
                sigma=_optional_float(rec["sigma"]),
                seed=int(rec["seed"]),
            )
            for rec in csv.DictReader(fh)
        ]

