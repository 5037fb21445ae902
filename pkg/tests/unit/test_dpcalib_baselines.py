"""Tests for the absolute-sum baseline calibrations (Gaussian and Laplace)."""

import math

import pytest

from fastlloyd.config.models import ProtocolParams
from fastlloyd.core.exceptions import InvalidInputError
from fastlloyd.dpcalib.accountant import MAX_ITERATIONS, MIN_ITERATIONS, build_noise_plan
from fastlloyd.dpcalib.baselines import (
    build_gaussian_baseline_plan,
    build_laplace_baseline_plan,
    build_noiseless_plan,
    choose_iterations_gaussian_baseline,
    choose_iterations_laplace,
    matched_iterations,
    split_epsilon_laplace,
    split_sigma_gaussian_baseline,
)


class TestGaussianBaseline:
    @pytest.mark.parametrize("d", [1, 2, 4, 16, 512])
    def test_split_identity(self, d):
        sigma_S, sigma_C = split_sigma_gaussian_baseline(2.0, d, 0.5)
        assert 1 / sigma_S**2 + 1 / sigma_C**2 == pytest.approx(1 / 4.0, rel=1e-12)
        assert sigma_C == pytest.approx(math.sqrt(math.sqrt(d) / 1.0) * sigma_S, rel=1e-12)

    def test_ratio_example(self):
        sigma_S, sigma_C = split_sigma_gaussian_baseline(1.0, 4, 0.5)
        assert sigma_C / sigma_S == pytest.approx(math.sqrt(2))

    def test_iterations_formula(self):
        params = ProtocolParams(k=2, d=2)
        sigma, n = 1.5, 3000
        raw = n**2 * 0.004 / (8 * 2 * sigma**2 * (1.0 + math.sqrt(2)) ** 2)
        expected = min(MAX_ITERATIONS, max(MIN_ITERATIONS, math.floor(raw)))
        assert choose_iterations_gaussian_baseline(params, sigma, n) == expected

    def test_plan_stds(self):
        params = ProtocolParams(k=3, d=4, epsilon=0.5)
        plan = build_gaussian_baseline_plan(params, 20_000)
        root_t = math.sqrt(plan.T)
        assert plan.algo == "gauss"
        assert plan.std_R[0] == pytest.approx(plan.sigma_R * 2.0 * root_t)
        assert plan.std_C[0] == pytest.approx(plan.sigma_C * root_t)


class TestLaplaceBaseline:
    def test_even_split_for_unit_ratio(self):
        eps_S, eps_C = split_epsilon_laplace(0.2, d=1, rho=0.5, bound=1.0)
        assert eps_S == pytest.approx(eps_C)
        assert eps_S + eps_C == pytest.approx(0.2)

    def test_split_ratio(self):
        eps_S, eps_C = split_epsilon_laplace(1.0, d=2, rho=0.5)
        assert eps_C / eps_S == pytest.approx((1.0 / 8.0) ** (1 / 3))

    def test_non_positive_budget(self):
        with pytest.raises(InvalidInputError):
            split_epsilon_laplace(0.0, 2, 0.5)

    def test_budget_conservation(self):
        params = ProtocolParams(k=4, d=3, epsilon=0.75)
        plan = build_laplace_baseline_plan(params, 50_000)
        assert plan.delta == 0.0
        assert plan.distribution == "laplace"
        assert plan.T * (plan.eps_sums + plan.eps_counts) == pytest.approx(0.75)
        assert plan.std_R[0] == pytest.approx(3.0 / plan.eps_sums)
        assert plan.std_C[0] == pytest.approx(1.0 / plan.eps_counts)

    def test_iterations_clamped(self):
        assert choose_iterations_laplace(ProtocolParams(epsilon=1.0), 10**9) == MAX_ITERATIONS
        assert choose_iterations_laplace(ProtocolParams(epsilon=0.1), 100) == MIN_ITERATIONS

    def test_zero_epsilon(self):
        with pytest.raises(InvalidInputError):
            build_laplace_baseline_plan(ProtocolParams(epsilon=0.0), 1000)


class TestNoiselessPlan:
    def test_defaults(self):
        plan = build_noiseless_plan(ProtocolParams(), 1000)
        assert plan.distribution == "none"
        assert set(plan.std_R) == {0.0}
        assert math.isinf(plan.epsilon)

    @pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 4.0])
    @pytest.mark.parametrize("n", [1_000, 10_000, 1_000_000])
    def test_iterations_match_relative_sum_plan(self, eps, n):
        params = ProtocolParams(k=8, d=16, epsilon=eps)
        assert build_noiseless_plan(params, n).T == build_noise_plan(params, n).T
        assert matched_iterations(params, n) == build_noise_plan(params, n).T

    @pytest.mark.parametrize("eps", [0.0, math.inf])
    def test_no_budget_runs_upper_clamp(self, eps):
        assert build_noiseless_plan(ProtocolParams(epsilon=eps), 1000).T == MAX_ITERATIONS

    def test_override(self):
        assert build_noiseless_plan(ProtocolParams(t_override=12), 1000).T == 12
