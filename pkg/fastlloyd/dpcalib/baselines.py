"""Calibration for the absolute-sum baselines: Gaussian (GLloyd) and Laplace (SuLloyd)."""

from __future__ import annotations

import logging
import math

from fastlloyd.cluster.radius import compute_radius
from fastlloyd.config.models import ProtocolParams
from fastlloyd.core.exceptions import InvalidInputError
from fastlloyd.dpcalib.accountant import (
    ERROR_TARGET,
    MAX_ITERATIONS,
    NoisePlan,
    calibrate_sigma,
    check_ring_capacity,
    choose_iterations,
    clamp_iterations,
    forced_iterations,
    resolve_delta,
)

logger = logging.getLogger(__name__)


def split_sigma_gaussian_baseline(sigma: float, d: int, rho: float) -> tuple[float, float]:
    """sigma_C = sqrt(sqrt(d) / (2 rho)) * sigma_S with 1/sigma_S^2 + 1/sigma_C^2 = 1/sigma^2."""
    ratio_sq = math.sqrt(d) / (2.0 * rho)
    sigma_S = sigma * math.sqrt(1.0 + 1.0 / ratio_sq)
    sigma_C = sigma * math.sqrt(1.0 + ratio_sq)
    return sigma_S, sigma_C


def choose_iterations_gaussian_baseline(
    params: ProtocolParams, sigma: float, n_total: int
) -> int:
    """T <= N^2 0.004 / (k^3 d sigma^2 (2 rho + sqrt(d))^2), clamped to [2, 7]."""
    forced = forced_iterations(params)
    if forced is not None:
        return forced
    rho = params.effective_rho
    denom = params.k**3 * params.d * sigma**2 * (2.0 * rho + math.sqrt(params.d)) ** 2
    raw = math.inf if denom == 0 else n_total**2 * ERROR_TARGET / denom
    return clamp_iterations(raw)


def build_gaussian_baseline_plan(params: ProtocolParams, n_total: int) -> NoisePlan:
    """Gaussian noise on absolute sums with domain sensitivity sqrt(d) * B."""
    delta = resolve_delta(params, n_total)
    sigma = calibrate_sigma(params.epsilon, delta)
    sigma_S, sigma_C = split_sigma_gaussian_baseline(sigma, params.d, params.effective_rho)
    T = choose_iterations_gaussian_baseline(params, sigma, n_total)
    root_t = math.sqrt(T)
    sensitivity = math.sqrt(params.d) * params.bound
    logger.info(
        "GLloyd plan: sigma=%.4f sigma_S=%.4f sigma_C=%.4f T=%d", sigma, sigma_S, sigma_C, T
    )
    check_ring_capacity(params, n_total, params.bound)
    return NoisePlan(
        algo="gauss",
        epsilon=params.epsilon,
        delta=delta,
        sigma=sigma,
        sigma_R=sigma_S,
        sigma_C=sigma_C,
        T=T,
        std_R=[sigma_S * sensitivity * root_t] * T,
        std_C=[sigma_C * root_t] * T,
    )


def split_epsilon_laplace(
    eps_t: float, d: int, rho: float, bound: float = 1.0
) -> tuple[float, float]:
    """Per-iteration split with eps_C = eps_S * (4 rho^2 / (d^3 B^2))^(1/3)."""
    if eps_t <= 0:
        raise InvalidInputError(f"per-iteration epsilon must be positive, got {eps_t}")
    ratio = (4.0 * rho**2 / (d**3 * bound**2)) ** (1.0 / 3.0)
    eps_S = eps_t / (1.0 + ratio)
    return eps_S, eps_t - eps_S


def choose_iterations_laplace(params: ProtocolParams, n_total: int) -> int:
    """Largest T whose per-iteration Laplace MSE stays under the error target, in [2, 7].

    With the optimal split the per-iteration error is
    2 k^3 T^2 (d B^(2/3) + (4 rho^2)^(1/3))^3 / (N^2 eps^2).
    """
    forced = forced_iterations(params)
    if forced is not None:
        return forced
    rho = params.effective_rho
    spread = params.d * params.bound ** (2.0 / 3.0) + (4.0 * rho**2) ** (1.0 / 3.0)
    raw = n_total * params.epsilon * math.sqrt(ERROR_TARGET / (2.0 * params.k**3 * spread**3))
    return clamp_iterations(raw)


def build_laplace_baseline_plan(params: ProtocolParams, n_total: int) -> NoisePlan:
    """Pure eps-DP: eps/T per iteration, Laplace scales d*B/eps_S and 1/eps_C."""
    if not params.epsilon > 0 or not math.isfinite(params.epsilon):
        raise InvalidInputError(f"epsilon must be positive and finite, got {params.epsilon}")
    T = choose_iterations_laplace(params, n_total)
    eps_S, eps_C = split_epsilon_laplace(
        params.epsilon / T, params.d, params.effective_rho, params.bound
    )
    logger.info("SuLloyd plan: eps_S=%.4g eps_C=%.4g per iteration, T=%d", eps_S, eps_C, T)
    check_ring_capacity(params, n_total, params.bound)
    return NoisePlan(
        algo="su",
        distribution="laplace",
        epsilon=params.epsilon,
        delta=0.0,
        eps_sums=eps_S,
        eps_counts=eps_C,
        T=T,
        std_R=[params.d * params.bound / eps_S] * T,
        std_C=[1.0 / eps_C] * T,
    )


def matched_iterations(params: ProtocolParams, n_total: int) -> int:
    """T the relative-sum heuristic grants at the same (N, k, d, eps, delta).

    Without a usable budget (eps of 0 or infinity) this is the upper clamp.
    """
    if not 0.0 < params.epsilon < math.inf:
        return MAX_ITERATIONS
    sigma = calibrate_sigma(params.epsilon, resolve_delta(params, n_total))
    return choose_iterations(params, sigma, compute_radius(params).eta, n_total)


def build_noiseless_plan(params: ProtocolParams, n_total: int) -> NoisePlan:
    """Non-private Lloyd, iteration-matched to FastLloyd at the same budget unless overridden."""
    T = forced_iterations(params) or matched_iterations(params, n_total)
    check_ring_capacity(params, n_total, params.bound)
    return NoisePlan(
        algo="lloyd",
        distribution="none",
        epsilon=math.inf,
        delta=0.0,
        T=T,
        std_R=[0.0] * T,
        std_C=[0.0] * T,
    )
