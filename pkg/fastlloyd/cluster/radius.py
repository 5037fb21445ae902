"""Radius constraint heuristic and Constant/Step schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

from fastlloyd.config.models import ProtocolParams, RadiusPolicy


@dataclass(frozen=True)
class RadiusSchedule:
    policy: RadiusPolicy
    eta: float
    eta0: float
    beta: float

    def at(self, round_index: int) -> float:
        """Radius in force for 0-based iteration ``round_index``."""
        return self.eta0 if round_index == 0 else self.eta


def domain_diagonal(d: int, bound: float) -> float:
    return math.sqrt(d) * 2.0 * bound


def compute_radius(params: ProtocolParams) -> RadiusSchedule:
    """eta = alpha * beta / (2 * k^(1/d)) with beta the domain diagonal."""
    beta = domain_diagonal(params.d, params.bound)
    eta = params.alpha * beta / (2.0 * params.k ** (1.0 / params.d))
    eta0 = beta / 2.0 if params.radius_policy == RadiusPolicy.STEP else eta
    return RadiusSchedule(policy=params.radius_policy, eta=eta, eta0=eta0, beta=beta)
