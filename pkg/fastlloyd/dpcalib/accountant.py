"""Gaussian-DP accountant: noise multiplier, budget split, iteration count, noise stds."""

from __future__ import annotations

import logging
import math

from pydantic import BaseModel, ConfigDict
from scipy import optimize, special

from fastlloyd.cluster.radius import RadiusSchedule, compute_radius
from fastlloyd.config.models import ProtocolParams
from fastlloyd.core.exceptions import InvalidInputError

logger = logging.getLogger(__name__)

# Per-iteration error target relative to the bound, and the iteration clamp.
ERROR_TARGET = 0.004
MIN_ITERATIONS = 2
MAX_ITERATIONS = 7

THETA_LOW = 1e-8
THETA_HIGH = 100.0
THETA_RTOL = 1e-12

_LOG = {"e": math.log, "2": math.log2, "10": math.log10}


class NoisePlan(BaseModel):
    """Calibrated noise for a run; serialized into the run report for audits."""

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    algo: str = "fast"
    distribution: str = "gaussian"  # gaussian, laplace or none
    epsilon: float
    delta: float
    sigma: float | None = None
    sigma_R: float | None = None
    sigma_C: float | None = None
    eps_sums: float | None = None  # Laplace per-iteration split
    eps_counts: float | None = None
    T: int
    # Gaussian std per coordinate, or the Laplace scale b for distribution="laplace".
    std_R: list[float]
    std_C: list[float]

    def stds(self, round_index: int) -> tuple[float, float]:
        return self.std_R[round_index], self.std_C[round_index]


def delta_for_theta(epsilon: float, theta: float) -> float:
    """delta(eps; theta) for a theta-GDP mechanism."""
    if theta <= 0:
        return 0.0
    a = -epsilon / theta + theta / 2.0
    b = -epsilon / theta - theta / 2.0
    return float(special.ndtr(a) - math.exp(epsilon + special.log_ndtr(b)))


def calibrate_sigma(epsilon: float, delta: float) -> float:
    """Smallest sigma = 1/theta whose theta-GDP guarantee implies (eps, delta)-DP."""
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise InvalidInputError(f"epsilon must be positive and finite, got {epsilon}")
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")

    def excess(theta: float) -> float:
        return delta_for_theta(epsilon, theta) - delta

    hi = THETA_HIGH
    while excess(hi) <= 0:
        hi *= 2.0
    theta = optimize.root_scalar(
        excess, bracket=[THETA_LOW, hi], method="bisect", rtol=THETA_RTOL, xtol=1e-300
    ).root
    # Land on the feasible side of the root.
    while excess(theta) > 0:
        theta *= 1.0 - 1e-10
    return 1.0 / theta


def split_sigma(sigma: float, d: int) -> tuple[float, float]:
    """Split sigma between relative sums and counts: sigma_C = (4d)^(1/4) * sigma_R."""
    root = math.sqrt(4.0 * d)
    sigma_C = sigma * math.sqrt(1.0 + root)
    sigma_R = sigma_C / math.sqrt(root)
    return sigma_R, sigma_C


def clamp_iterations(raw: float) -> int:
    if not math.isfinite(raw):
        return MAX_ITERATIONS
    return int(min(MAX_ITERATIONS, max(MIN_ITERATIONS, math.floor(raw))))


def forced_iterations(params: ProtocolParams) -> int | None:
    if params.t_override is None:
        return None
    logger.warning("Iteration count forced to %d (outside the [2, 7] heuristic)", params.t_override)
    return max(1, params.t_override)


def choose_iterations(params: ProtocolParams, sigma: float, eta: float, n_total: int) -> int:
    """T = floor(4 N^2 0.004 / (k^3 eta^2 sigma^2 (1 + sqrt(4d))^2)) clamped to [2, 7]."""
    forced = forced_iterations(params)
    if forced is not None:
        return forced
    if eta <= 0:
        raise InvalidInputError(f"radius must be positive, got {eta}")
    denom = params.k**3 * eta**2 * sigma**2 * (1.0 + math.sqrt(4.0 * params.d)) ** 2
    raw = math.inf if denom == 0 else 4.0 * n_total**2 * ERROR_TARGET / denom
    return clamp_iterations(raw)


def noise_std(plan: NoisePlan, eta_t: float) -> tuple[float, float]:
    """Per-coordinate std for relative sums at radius eta_t, and std for counts."""
    if plan.sigma_R is None or plan.sigma_C is None:
        raise InvalidInputError("noise_std needs a Gaussian relative-sum plan")
    root_t = math.sqrt(plan.T)
    return plan.sigma_R * eta_t * root_t, plan.sigma_C * root_t


def default_delta(n_total: int, log_base: str = "e") -> float:
    """delta = 1 / (N log N)."""
    if n_total < 2:
        raise InvalidInputError(f"default delta needs N >= 2, got {n_total}")
    return 1.0 / (n_total * _LOG[log_base](n_total))


def resolve_delta(params: ProtocolParams, n_total: int) -> float:
    if params.delta is not None:
        return params.delta
    return default_delta(n_total, params.delta_log_base)


def check_ring_capacity(params: ProtocolParams, n_total: int, magnitude: float) -> bool:
    """Warn when N * magnitude * 2^q may not fit the signed ring range."""
    headroom = 2.0 ** (params.w - 1)
    needed = n_total * max(magnitude, 1.0) * 2.0**params.q
    if needed >= headroom:
        logger.warning(
            "Ring Z_2^%d with q=%d may overflow: N=%d, magnitude=%.3f needs %.3g of %.3g",
            params.w,
            params.q,
            n_total,
            magnitude,
            needed,
            headroom,
        )
        return False
    return True


def build_noise_plan(
    params: ProtocolParams,
    n_total: int,
    schedule: RadiusSchedule | None = None,
) -> NoisePlan:
    """Calibrate sigma, split it, pick T from the steady radius, and lay out per-round stds."""
    schedule = schedule or compute_radius(params)
    delta = resolve_delta(params, n_total)
    sigma = calibrate_sigma(params.epsilon, delta)
    sigma_R, sigma_C = split_sigma(sigma, params.d)
    T = choose_iterations(params, sigma, schedule.eta, n_total)

    base = NoisePlan(
        algo="fast",
        epsilon=params.epsilon,
        delta=delta,
        sigma=sigma,
        sigma_R=sigma_R,
        sigma_C=sigma_C,
        T=T,
        std_R=[],
        std_C=[],
    )
    per_round = [noise_std(base, schedule.at(t)) for t in range(T)]
    plan = base.model_copy(
        update={"std_R": [r for r, _ in per_round], "std_C": [c for _, c in per_round]}
    )
    check_ring_capacity(params, n_total, schedule.eta0)
    logger.info(
        "Noise plan: eps=%.3g delta=%.3g sigma=%.4f sigma_R=%.4f sigma_C=%.4f T=%d",
        params.epsilon,
        delta,
        sigma,
        sigma_R,
        sigma_C,
        T,
    )
    return plan


def composed_gdp(plan: NoisePlan) -> float:
    """1/theta^2 summed over T rounds of both queries; equals 1/sigma^2 for a valid plan."""
    per_round = (1.0 / (plan.sigma_R * math.sqrt(plan.T))) ** 2 + (
        1.0 / (plan.sigma_C * math.sqrt(plan.T))
    ) ** 2
    return plan.T * per_round
