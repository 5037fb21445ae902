"""Shared test fixtures: small datasets, default parameters, seeded streams, transports."""

from __future__ import annotations

import numpy as np
import pytest

from fastlloyd.config.models import ProtocolParams, SizeRatio, SynthSpec
from fastlloyd.core.dataset import partition_dataset
from fastlloyd.core.rng import SeededRng
from fastlloyd.core.types import CentroidState, Dataset
from fastlloyd.data.synth import generate_synth
from fastlloyd.msa.transport import LoopbackTransport


def quantize_to_grid(points: np.ndarray, q: int = 16) -> np.ndarray:
    """Snap coordinates to the 2^-q grid so fixed-point sums are exact."""
    return np.round(np.asarray(points) * 2.0**q) / 2.0**q


def textbook_lloyd(points: np.ndarray, init: np.ndarray, iterations: int) -> np.ndarray:
    """Single-machine Lloyd: nearest centroid, mean update, empty clusters hold."""
    centroids = np.array(init, dtype=np.float64)
    for _ in range(iterations):
        dist = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
        labels = np.argmin(dist, axis=1)
        for j in range(centroids.shape[0]):
            members = points[labels == j]
            if members.shape[0]:
                centroids[j] = members.sum(axis=0) / members.shape[0]
    return centroids


@pytest.fixture
def params() -> ProtocolParams:
    return ProtocolParams(k=2, d=2, epsilon=1.0, clients=2, seed=7)


@pytest.fixture
def rng() -> SeededRng:
    return SeededRng(1234)


@pytest.fixture
def two_blobs() -> Dataset:
    """Two tight 1-d blobs around -0.8 and 0.8."""
    gen = np.random.default_rng(5)
    left = -0.8 + gen.normal(0.0, 1e-4, size=(200, 1))
    right = 0.8 + gen.normal(0.0, 1e-4, size=(200, 1))
    return Dataset(quantize_to_grid(np.vstack([left, right])))


@pytest.fixture
def synth_small() -> Dataset:
    spec = SynthSpec(
        n=600, k_true=3, d=2, separation=0.5, size_ratio=SizeRatio.BALANCED, outliers=0, seed=3
    )
    data, _ = generate_synth(spec)
    return Dataset(quantize_to_grid(data.points))


@pytest.fixture
def synth_params() -> ProtocolParams:
    return ProtocolParams(k=3, d=2, epsilon=1.0, clients=2, seed=11)


@pytest.fixture
def synth_shards(synth_small, synth_params) -> list[Dataset]:
    return partition_dataset(synth_small, synth_params.clients, SeededRng(synth_params.seed))


@pytest.fixture
def loopback() -> LoopbackTransport:
    return LoopbackTransport()


@pytest.fixture
def grid():
    return quantize_to_grid


@pytest.fixture
def lloyd_oracle():
    return textbook_lloyd


@pytest.fixture
def state_at():
    def make(centroids, iteration: int = 0) -> CentroidState:
        return CentroidState(np.asarray(centroids, dtype=np.float64), iteration)

    return make
