"""Entry points for each algorithm over the shared protocol machinery."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

from fastlloyd.config.models import AlgorithmKind, ExecutionMode, ProtocolParams
from fastlloyd.core.types import CentroidState, Dataset
from fastlloyd.msa.central import run_central
from fastlloyd.msa.protocol import ProtocolResult, run_protocol
from fastlloyd.msa.transport import Transport


def run_algorithm(
    algo: AlgorithmKind | str,
    params: ProtocolParams,
    shards: Sequence[Dataset],
    transport: Transport | None = None,
    mode: ExecutionMode | str = ExecutionMode.LOOPBACK,
    **kwargs: Any,
) -> ProtocolResult:
    """Masked protocol over ``transport`` (loopback by default), or the central path."""
    if ExecutionMode(mode) == ExecutionMode.CENTRAL:
        return run_central(params, shards, algo, **kwargs)
    return run_protocol(params, shards, transport, algo, **kwargs)


def run_fastlloyd(
    params: ProtocolParams, shards: Sequence[Dataset], transport: Transport | None = None, **kwargs
) -> CentroidState:
    return run_algorithm(AlgorithmKind.FAST, params, shards, transport, **kwargs).state


def run_lloyd(
    params: ProtocolParams, shards: Sequence[Dataset], transport: Transport | None = None, **kwargs
) -> CentroidState:
    return run_algorithm(AlgorithmKind.LLOYD, params, shards, transport, **kwargs).state


def run_gllloyd(
    params: ProtocolParams, shards: Sequence[Dataset], transport: Transport | None = None, **kwargs
) -> CentroidState:
    return run_algorithm(AlgorithmKind.GAUSS, params, shards, transport, **kwargs).state


def run_sulloyd(
    params: ProtocolParams, shards: Sequence[Dataset], transport: Transport | None = None, **kwargs
) -> CentroidState:
    return run_algorithm(AlgorithmKind.SU, params, shards, transport, **kwargs).state
