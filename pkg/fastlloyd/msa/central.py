"""In-process execution without masks or transport, sharing the ring arithmetic.

For equal server noise draws this produces the same centroids as the masked protocol:
masks cancel exactly in the ring, so only the encoded sums and the quantized noise remain.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from typing import Any

import numpy as np

from fastlloyd.baselines.algorithms import RunPlan, plan_run
from fastlloyd.cluster.trace import TrajectoryRecorder
from fastlloyd.config.models import AlgorithmKind, ProtocolParams
from fastlloyd.core.types import Dataset, GlobalUpdate, LocalUpdate
from fastlloyd.msa.protocol import ProtocolResult
from fastlloyd.msa.server import draw_noise
from fastlloyd.msa.session import build_report, finish_round, initial_state, local_round, union
from fastlloyd.ringcodec.codec import RingMatrix, decode, encode, quantize_noise

logger = logging.getLogger(__name__)


def _noised_sum(
    parts: Sequence, rng: np.random.Generator, distribution: str, scale: float, q: int, w: int
) -> np.ndarray:
    encoded = [encode(part, q=q, w=w) for part in parts]
    total: RingMatrix = encoded[0]
    for matrix in encoded[1:]:
        total = total + matrix
    gamma = draw_noise(rng, distribution, scale, total.shape)
    return decode(total + quantize_noise(gamma, q=q, w=w))


def central_aggregate(
    updates: Sequence[LocalUpdate],
    rng: np.random.Generator,
    distribution: str,
    scale_sums: float,
    scale_counts: float,
    q: int = 16,
    w: int = 64,
) -> GlobalUpdate:
    """Fixed-point sum of all updates plus quantized noise; sums drawn before counts."""
    sums = _noised_sum([u.sums for u in updates], rng, distribution, scale_sums, q, w)
    counts = _noised_sum([u.counts for u in updates], rng, distribution, scale_counts, q, w)
    return GlobalUpdate(sums=sums, counts=counts.reshape(-1), relative=updates[0].relative)


def run_central(
    params: ProtocolParams,
    shards: Sequence[Dataset],
    algo: AlgorithmKind | str = AlgorithmKind.FAST,
    *,
    n_total: int | None = None,
    noise_seed: int | None = None,
    noiseless: bool = False,
    plan: RunPlan | None = None,
    evaluation: Dataset | None = None,
    trace_path: str | None = None,
    config: dict[str, Any] | None = None,
) -> ProtocolResult:
    n_total = n_total or sum(s.n for s in shards)
    plan = plan or plan_run(algo, params, n_total)
    if noiseless:
        plan = plan.without_noise()
    rng = np.random.default_rng(noise_seed)
    recorder = TrajectoryRecorder() if trace_path else None

    state = initial_state(params)
    if recorder is not None:
        recorder.record(state)
    iter_ms: list[float] = []
    for round_plan in plan.rounds:
        started = time.perf_counter()
        updates = [local_round(shard, state, round_plan) for shard in shards]
        noise = round_plan.noise
        aggregated = central_aggregate(
            updates,
            rng,
            noise.distribution,
            noise.scale_sums,
            noise.scale_counts,
            q=params.q,
            w=params.w,
        )
        state = finish_round(aggregated, state, round_plan, plan)
        iter_ms.append((time.perf_counter() - started) * 1000.0)
        if recorder is not None:
            recorder.record(state)

    if recorder is not None and trace_path:
        recorder.write(trace_path)
    report = build_report(
        params=params,
        plan=plan,
        state=state,
        evaluation=evaluation if evaluation is not None else union(shards),
        transport="central",
        iter_ms=iter_ms,
        config={"noiseless": noiseless, **(config or {})},
    )
    logger.info("Central %s run finished: T=%d NICV=%.6f", plan.algo.value, plan.T, report.nicv)
    return ProtocolResult(state=state, report=report, trajectory=recorder)
