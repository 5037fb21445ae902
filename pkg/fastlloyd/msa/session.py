"""Per-party iteration loop shared by the MSA and central execution paths."""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np

from fastlloyd.baselines.algorithms import RoundPlan, RunPlan
from fastlloyd.cluster.init import sphere_packing_init
from fastlloyd.cluster.steps import assign, local_update, reconstruct_centroids
from fastlloyd.cluster.trace import TrajectoryRecorder
from fastlloyd.config.models import ProtocolParams
from fastlloyd.core.logging import protocol_context
from fastlloyd.core.rng import SeededRng
from fastlloyd.core.types import CentroidState, Dataset, GlobalUpdate, LocalUpdate
from fastlloyd.eval.metrics import nicv
from fastlloyd.eval.report import RunReport

logger = logging.getLogger(__name__)

Aggregator = Callable[[LocalUpdate, int], GlobalUpdate]


def local_round(shard: Dataset, state: CentroidState, round_plan: RoundPlan) -> LocalUpdate:
    labels = assign(shard, state, round_plan.radius)
    return local_update(shard, labels, state, relative=round_plan.relative)


def finish_round(
    update: GlobalUpdate, state: CentroidState, round_plan: RoundPlan, plan: RunPlan
) -> CentroidState:
    return reconstruct_centroids(
        update,
        state,
        round_plan.radius,
        bound=plan.bound,
        count_floor=plan.count_floor,
        clip=round_plan.clip,
        strategy=plan.post_processing,
    )


def initial_state(params: ProtocolParams) -> CentroidState:
    return sphere_packing_init(params, SeededRng(params.seed))


class ClientSession:
    """Init, then T rounds of assign -> local update -> aggregate -> reconstruct."""

    def __init__(
        self,
        shard: Dataset,
        party: int,
        params: ProtocolParams,
        plan: RunPlan,
        aggregator: Aggregator,
        recorder: TrajectoryRecorder | None = None,
    ):
        self.shard = shard
        self.party = party
        self.params = params
        self.plan = plan
        self.aggregator = aggregator
        self.recorder = recorder
        self.iter_ms: list[float] = []

    def run(self) -> CentroidState:
        state = initial_state(self.params)
        if self.recorder is not None:
            self.recorder.record(state)
        for round_plan in self.plan.rounds:
            started = time.perf_counter()
            update = local_round(self.shard, state, round_plan)
            aggregated = self.aggregator(update, round_plan.index)
            state = finish_round(aggregated, state, round_plan, self.plan)
            self.iter_ms.append((time.perf_counter() - started) * 1000.0)
            if self.recorder is not None:
                self.recorder.record(state)
        logger.debug(
            "Finished %d rounds", self.plan.T, extra=protocol_context("client", self.party)
        )
        return state


def union(shards: Sequence[Dataset]) -> Dataset:
    return Dataset(np.vstack([s.points for s in shards]))


def build_report(
    *,
    params: ProtocolParams,
    plan: RunPlan,
    state: CentroidState,
    evaluation: Dataset | None,
    transport: str,
    iter_ms: Sequence[float] = (),
    bytes_up_per_client: int = 0,
    bytes_down_per_client: int = 0,
    bytes_total: int = 0,
    wire_bytes_total: int = 0,
    sends_per_client: int = 0,
    config: dict[str, Any] | None = None,
) -> RunReport:
    T = max(plan.T, 1)
    echo = {"params": params.model_dump(mode="json"), "algo": plan.algo.value}
    echo.update(config or {})
    return RunReport(
        algo=plan.algo.value,
        seed=params.seed,
        transport=transport,
        T=plan.T,
        epsilon=plan.noise_plan.epsilon,
        delta=plan.noise_plan.delta,
        nicv=None if evaluation is None else nicv(evaluation, state),
        centroids=state.centroids.tolist(),
        noise_plan=plan.noise_plan,
        iter_ms=list(iter_ms),
        iter_ms_mean=float(np.mean(iter_ms)) if len(iter_ms) else 0.0,
        bytes_up_per_client=bytes_up_per_client,
        bytes_down_per_client=bytes_down_per_client,
        bytes_per_iter=bytes_total // T,
        wire_bytes_per_iter=wire_bytes_total // T,
        rounds_per_iter=sends_per_client / T,
        config=echo,
    )
