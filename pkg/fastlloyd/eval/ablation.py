"""Radius-policy and post-processing ablation over alpha at a fixed epsilon."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass

from fastlloyd.config.models import (
    AlgorithmKind,
    ExecutionMode,
    PostProcessing,
    ProtocolParams,
    RadiusPolicy,
)
from fastlloyd.core.types import Dataset
from fastlloyd.eval.sweep import confidence_interval, sweep

logger = logging.getLogger(__name__)

ABLATION_ALPHAS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
ABLATION_EPSILON = 0.1


@dataclass(frozen=True)
class AblationRow:
    alpha: float
    radius_policy: str
    post_processing: str
    runs: int
    nicv_mean: float
    ci_half_width: float


def ablate(
    params: ProtocolParams,
    dataset: Dataset,
    runs: int,
    alphas: Sequence[float] = ABLATION_ALPHAS,
    policies: Sequence[RadiusPolicy] = tuple(RadiusPolicy),
    strategies: Sequence[PostProcessing] = tuple(PostProcessing),
    epsilon: float = ABLATION_EPSILON,
    workers: int = 1,
) -> list[AblationRow]:
    rows: list[AblationRow] = []
    for alpha, policy, strategy in itertools.product(alphas, policies, strategies):
        variant = params.model_copy(
            update={"alpha": alpha, "radius_policy": policy, "post_processing": strategy}
        )
        results = sweep(
            variant,
            dataset,
            [AlgorithmKind.FAST],
            [epsilon],
            runs,
            mode=ExecutionMode.CENTRAL,
            workers=workers,
        )
        mean, half = confidence_interval([r.nicv for r in results])
        rows.append(
            AblationRow(
                alpha=alpha,
                radius_policy=RadiusPolicy(policy).value,
                post_processing=PostProcessing(strategy).value,
                runs=runs,
                nicv_mean=mean,
                ci_half_width=half,
            )
        )
        logger.debug("Ablation alpha=%.2f %s/%s: %.5f", alpha, policy, strategy, mean)
    return rows
