"""End-to-end protocol runs: M client sessions and one aggregation server over a transport."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import FIRST_EXCEPTION, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Any

import numpy as np

from fastlloyd.baselines.algorithms import RunPlan, plan_run
from fastlloyd.cluster.trace import TrajectoryRecorder
from fastlloyd.config.models import AlgorithmKind, ProtocolParams, TransportConfig
from fastlloyd.core.exceptions import InvalidInputError, ProtocolViolationError
from fastlloyd.core.rng import SeededRng
from fastlloyd.core.types import CentroidState, Dataset
from fastlloyd.eval.report import RunReport
from fastlloyd.msa.client import MsaClient
from fastlloyd.msa.server import AggregationServer, ServerStats
from fastlloyd.msa.session import ClientSession, build_report, union
from fastlloyd.msa.transport import Channel, Listener, LoopbackTransport, Transport, connect

logger = logging.getLogger(__name__)


@dataclass
class ProtocolResult:
    state: CentroidState
    report: RunReport
    server_stats: ServerStats | None = None
    trajectory: TrajectoryRecorder | None = None
    party_states: list[CentroidState] | None = None
    transcript: list | None = None


def _transport_label(transport: Transport) -> str:
    return type(transport).__name__.removesuffix("Transport").lower()


def _close_all(channels: Sequence[Channel]) -> None:
    for channel in channels:
        channel.close()


def _join(futures: Sequence[Future], channels: Sequence[Channel]) -> None:
    """Wait for every party; on the first failure unblock the rest and re-raise it."""
    done, _ = wait(futures, return_when=FIRST_EXCEPTION)
    failed = next((f for f in futures if f in done and f.exception() is not None), None)
    if failed is None:
        return
    logger.error("Protocol aborted: %s", failed.exception())
    _close_all(channels)
    wait(futures)
    raise failed.exception()


def run_protocol(
    params: ProtocolParams,
    shards: Sequence[Dataset],
    transport: Transport | None = None,
    algo: AlgorithmKind | str = AlgorithmKind.FAST,
    *,
    n_total: int | None = None,
    noise_seed: int | None = None,
    noiseless: bool = False,
    plan: RunPlan | None = None,
    round_timeout_s: float = 30.0,
    record_transcript: bool = False,
    evaluation: Dataset | None = None,
    trace_path: str | None = None,
    config: dict[str, Any] | None = None,
) -> ProtocolResult:
    """Run the selected algorithm with one in-process server and one thread per client."""
    clients = len(shards)
    if clients != params.clients:
        raise InvalidInputError(f"{clients} shards for {params.clients} configured clients")
    transport = transport or LoopbackTransport()
    n_total = n_total or sum(s.n for s in shards)
    plan = plan or plan_run(algo, params, n_total)
    if noiseless:
        plan = plan.without_noise()

    server_channels, client_channels = transport.connect(clients)
    every_channel = [*server_channels, *client_channels]
    server = AggregationServer(
        server_channels,
        plan.noise_schedule(),
        q=params.q,
        w=params.w,
        shape=(params.k, params.d),
        round_timeout_s=round_timeout_s,
        noise_seed=noise_seed,
        record_transcript=record_transcript,
    )
    rng = SeededRng(params.seed)
    msa_clients = [
        MsaClient(channel, party, params, rng, round_timeout_s)
        for party, channel in enumerate(client_channels)
    ]
    recorder = TrajectoryRecorder() if trace_path else None
    sessions = [
        ClientSession(
            shard,
            party,
            params,
            plan,
            msa_clients[party].aggregate,
            recorder=recorder if party == 0 else None,
        )
        for party, shard in enumerate(shards)
    ]

    logger.info(
        "Running %s over %s with %d clients, T=%d",
        plan.algo.value,
        _transport_label(transport),
        clients,
        plan.T,
    )
    with ThreadPoolExecutor(max_workers=clients + 1, thread_name_prefix="msa") as pool:
        server_future = pool.submit(server.run)
        session_futures = [pool.submit(session.run) for session in sessions]
        _join([server_future, *session_futures], every_channel)
    _close_all(every_channel)

    states = [f.result() for f in session_futures]
    for party, state in enumerate(states[1:], start=1):
        if not np.array_equal(state.centroids, states[0].centroids):
            raise ProtocolViolationError(f"party {party} finished with different centroids")

    if recorder is not None and trace_path:
        recorder.write(trace_path)
    first = msa_clients[0]
    report = build_report(
        params=params,
        plan=plan,
        state=states[0],
        evaluation=evaluation if evaluation is not None else union(shards),
        transport=_transport_label(transport),
        iter_ms=sessions[0].iter_ms,
        bytes_up_per_client=first.payload_bytes_sent,
        bytes_down_per_client=first.payload_bytes_received,
        bytes_total=sum(c.payload_bytes_sent + c.payload_bytes_received for c in msa_clients),
        wire_bytes_total=sum(
            ch.stats.wire_bytes_sent + ch.stats.wire_bytes_received for ch in client_channels
        ),
        sends_per_client=client_channels[0].stats.sends,
        config={"noiseless": noiseless, **(config or {})},
    )
    logger.info("Run finished: T=%d NICV=%.6f", plan.T, report.nicv)
    return ProtocolResult(
        state=states[0],
        report=report,
        server_stats=server.stats,
        trajectory=recorder,
        party_states=states,
        transcript=server.transcript if record_transcript else None,
    )


def serve(
    params: ProtocolParams,
    transport: TransportConfig,
    algo: AlgorithmKind | str = AlgorithmKind.FAST,
    *,
    n_total: int,
    noiseless: bool = False,
) -> ServerStats:
    """Process-mode server: listen, accept M clients, aggregate T rounds."""
    plan = plan_run(algo, params, n_total)
    if noiseless:
        plan = plan.without_noise()
    listener = Listener(transport.host, transport.port)
    try:
        channels = listener.accept(
            params.clients, transport.connect_timeout_s, transport.latency_ms
        )
    finally:
        listener.close()
    server = AggregationServer(
        channels,
        plan.noise_schedule(),
        q=params.q,
        w=params.w,
        shape=(params.k, params.d),
        round_timeout_s=transport.round_timeout_s,
        noise_seed=transport.noise_seed,
    )
    try:
        return server.run()
    finally:
        server.close()


def participate(
    params: ProtocolParams,
    shard: Dataset,
    transport: TransportConfig,
    algo: AlgorithmKind | str = AlgorithmKind.FAST,
    *,
    n_total: int,
    noiseless: bool = False,
    evaluation: Dataset | None = None,
    trace_path: str | None = None,
    config: dict[str, Any] | None = None,
) -> ProtocolResult:
    """Process-mode client: connect to the server and run this party's session."""
    plan = plan_run(algo, params, n_total)
    if noiseless:
        plan = plan.without_noise()
    channel = connect(
        transport.host, transport.port, transport.connect_timeout_s, transport.latency_ms
    )
    client = MsaClient(
        channel, transport.party_index, params, SeededRng(params.seed), transport.round_timeout_s
    )
    recorder = TrajectoryRecorder() if trace_path else None
    session = ClientSession(
        shard, transport.party_index, params, plan, client.aggregate, recorder=recorder
    )
    try:
        state = session.run()
    finally:
        channel.close()
    if recorder is not None and trace_path:
        recorder.write(trace_path)
    report = build_report(
        params=params,
        plan=plan,
        state=state,
        evaluation=evaluation if evaluation is not None else shard,
        transport="tcp",
        iter_ms=session.iter_ms,
        bytes_up_per_client=client.payload_bytes_sent,
        bytes_down_per_client=client.payload_bytes_received,
        bytes_total=(client.payload_bytes_sent + client.payload_bytes_received) * params.clients,
        wire_bytes_total=(channel.stats.wire_bytes_sent + channel.stats.wire_bytes_received)
        * params.clients,
        sends_per_client=channel.stats.sends,
        config={"noiseless": noiseless, **(config or {})},
    )
    return ProtocolResult(state=state, report=report, trajectory=recorder)
