"""Per-iteration runtime and communication benchmark on balanced synthetic data."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from fastlloyd.config.models import AlgorithmKind, ProtocolParams
from fastlloyd.core.dataset import partition_dataset
from fastlloyd.core.rng import SeededRng
from fastlloyd.data.synth import generate_timesynth
from fastlloyd.eval.report import closed_form_bytes
from fastlloyd.msa.protocol import run_protocol
from fastlloyd.msa.transport import LoopbackTransport, TcpTransport, Transport

logger = logging.getLogger(__name__)

BENCH_GRID: tuple[tuple[int, int, int], ...] = tuple(
    (n, k, d) for n in (10_000, 100_000) for k in (2, 5) for d in (2, 5)
)
BENCH_ITERATIONS = 100


@dataclass(frozen=True)
class BenchRow:
    algo: str
    n: int
    k: int
    d: int
    iterations: int
    iter_ms_mean: float
    iter_ms_std: float
    bytes_per_iter: int
    closed_form_bytes: int
    rounds_per_iter: float


def _transport(kind: str, latency_ms: float) -> Transport:
    if kind == "tcp":
        return TcpTransport(latency_ms=latency_ms)
    return LoopbackTransport(latency_ms=latency_ms)


def bench(
    grid: Sequence[tuple[int, int, int]] = BENCH_GRID,
    iterations: int = BENCH_ITERATIONS,
    latency_ms: float = 0.0,
    clients: int = 2,
    transport: str = "loopback",
    algo: AlgorithmKind | str = AlgorithmKind.FAST,
    seed: int = 0,
    w: int = 64,
) -> list[BenchRow]:
    """Time ``iterations`` forced rounds for every (N, k, d) in ``grid``."""
    rows: list[BenchRow] = []
    for n, k, d in grid:
        data = generate_timesynth(n, k, d, seed=seed)
        params = ProtocolParams(k=k, d=d, clients=clients, seed=seed, t_override=iterations, w=w)
        shards = partition_dataset(data, clients, SeededRng(seed))
        result = run_protocol(
            params, shards, _transport(transport, latency_ms), algo, noise_seed=seed
        )
        report = result.report
        row = BenchRow(
            algo=AlgorithmKind(algo).value,
            n=n,
            k=k,
            d=d,
            iterations=report.T,
            iter_ms_mean=report.iter_ms_mean,
            iter_ms_std=float(np.std(report.iter_ms)),
            bytes_per_iter=report.bytes_per_iter,
            closed_form_bytes=closed_form_bytes(clients, k, d, w),
            rounds_per_iter=report.rounds_per_iter,
        )
        logger.info("Bench N=%d k=%d d=%d: %.3f ms/iter", n, k, d, row.iter_ms_mean)
        rows.append(row)
    return rows
