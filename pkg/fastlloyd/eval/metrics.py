"""Utility metrics: NICV and AUC over an epsilon grid."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy import integrate

from fastlloyd.core.exceptions import InvalidInputError
from fastlloyd.core.types import CentroidState, Dataset


def nicv(data: Dataset, centroids: CentroidState) -> float:
    """Mean squared distance of every point to its nearest centroid (no discard rule)."""
    diff = data.points[:, None, :] - centroids.centroids[None, :, :]
    return float(np.einsum("nkd,nkd->nk", diff, diff).min(axis=1).mean())


def auc(nicv_by_eps: Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under the NICV-vs-epsilon curve."""
    if len(nicv_by_eps) < 2:
        raise InvalidInputError("AUC needs at least two (eps, NICV) points")
    eps = np.array([p[0] for p in nicv_by_eps], dtype=np.float64)
    values = np.array([p[1] for p in nicv_by_eps], dtype=np.float64)
    if np.any(np.diff(eps) <= 0):
        raise InvalidInputError(f"eps values must be strictly increasing, got {eps.tolist()}")
    return float(integrate.trapezoid(values, eps))
