"""Algorithm registry: per-round plans for FastLloyd and the comparator baselines.

Every algorithm runs the same assign -> local update -> aggregate -> reconstruct loop.
They differ only in the sum mode (relative vs absolute), the assignment radius, radius
clipping, and the noise the server adds.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

from fastlloyd.cluster.radius import compute_radius
from fastlloyd.config.models import AlgorithmKind, PostProcessing, ProtocolParams
from fastlloyd.dpcalib.accountant import NoisePlan, build_noise_plan
from fastlloyd.dpcalib.baselines import (
    build_gaussian_baseline_plan,
    build_laplace_baseline_plan,
    build_noiseless_plan,
)
from fastlloyd.msa.server import NoiseSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundPlan:
    index: int
    radius: float | None  # None: unconstrained assignment
    relative: bool
    clip: bool
    noise: NoiseSpec


@dataclass(frozen=True)
class RunPlan:
    algo: AlgorithmKind
    noise_plan: NoisePlan
    rounds: tuple[RoundPlan, ...]
    count_floor: float
    post_processing: PostProcessing
    bound: float

    @property
    def T(self) -> int:
        return len(self.rounds)

    def noise_schedule(self) -> list[NoiseSpec]:
        return [r.noise for r in self.rounds]

    def without_noise(self) -> RunPlan:
        """Same plan with every noise scale forced to zero (test and oracle runs)."""
        silent = NoiseSpec("none", 0.0, 0.0)
        return dataclasses.replace(
            self, rounds=tuple(dataclasses.replace(r, noise=silent) for r in self.rounds)
        )


class ClusteringAlgorithm:
    """Base algorithm."""

    kind: AlgorithmKind = AlgorithmKind.LLOYD
    description: str = ""
    relative: bool = False
    private: bool = True

    def noise_plan(self, params: ProtocolParams, n_total: int) -> NoisePlan:
        raise NotImplementedError

    def radius(self, params: ProtocolParams, round_index: int) -> float | None:
        return None

    def clip(self, params: ProtocolParams) -> bool:
        return False

    def count_floor(self, params: ProtocolParams) -> float:
        return params.count_floor

    def plan(self, params: ProtocolParams, n_total: int) -> RunPlan:
        noise = self.noise_plan(params, n_total)
        rounds = tuple(
            RoundPlan(
                index=t,
                radius=self.radius(params, t),
                relative=self.relative,
                clip=self.clip(params),
                noise=NoiseSpec(noise.distribution, noise.std_R[t], noise.std_C[t]),
            )
            for t in range(noise.T)
        )
        return RunPlan(
            algo=self.kind,
            noise_plan=noise,
            rounds=rounds,
            count_floor=self.count_floor(params),
            post_processing=params.post_processing,
            bound=params.bound,
        )


class FastLloyd(ClusteringAlgorithm):
    """Radius-constrained relative sums with Gaussian noise."""

    kind = AlgorithmKind.FAST
    description = "Radius-constrained relative updates, Gaussian noise calibrated by GDP"
    relative = True

    def noise_plan(self, params: ProtocolParams, n_total: int) -> NoisePlan:
        return build_noise_plan(params, n_total, compute_radius(params))

    def radius(self, params: ProtocolParams, round_index: int) -> float | None:
        return compute_radius(params).at(round_index)

    def clip(self, params: ProtocolParams) -> bool:
        return params.radius_clipping


class Lloyd(ClusteringAlgorithm):
    """Non-private federated Lloyd with sphere-packing init."""

    kind = AlgorithmKind.LLOYD
    description = "Non-private Lloyd over the same aggregation path"
    private = False

    def noise_plan(self, params: ProtocolParams, n_total: int) -> NoisePlan:
        return build_noiseless_plan(params, n_total)

    def count_floor(self, params: ProtocolParams) -> float:
        # Exact integer counts: only empty clusters hold.
        return 0.0


class GLloyd(ClusteringAlgorithm):
    """Gaussian noise on absolute sums with domain sensitivity."""

    kind = AlgorithmKind.GAUSS
    description = "Absolute sums, Gaussian noise, GDP composition"

    def noise_plan(self, params: ProtocolParams, n_total: int) -> NoisePlan:
        return build_gaussian_baseline_plan(params, n_total)


class SuLloyd(ClusteringAlgorithm):
    """Laplace noise on absolute sums, sequential composition over T iterations."""

    kind = AlgorithmKind.SU
    description = "Absolute sums, Laplace noise, pure eps-DP"

    def noise_plan(self, params: ProtocolParams, n_total: int) -> NoisePlan:
        return build_laplace_baseline_plan(params, n_total)


BUILTIN_ALGORITHMS: dict[AlgorithmKind, type[ClusteringAlgorithm]] = {
    AlgorithmKind.LLOYD: Lloyd,
    AlgorithmKind.SU: SuLloyd,
    AlgorithmKind.GAUSS: GLloyd,
    AlgorithmKind.FAST: FastLloyd,
}


def get_algorithm(kind: AlgorithmKind | str) -> ClusteringAlgorithm:
    return BUILTIN_ALGORITHMS[AlgorithmKind(kind)]()


def plan_run(kind: AlgorithmKind | str, params: ProtocolParams, n_total: int) -> RunPlan:
    algorithm = get_algorithm(kind)
    plan = algorithm.plan(params, n_total)
    logger.info(
        "Planned %s: T=%d, %s noise", algorithm.kind.value, plan.T, plan.noise_plan.distribution
    )
    return plan
