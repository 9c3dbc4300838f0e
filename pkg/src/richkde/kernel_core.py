"""Single-bandwidth Gaussian kernel density estimation.

The estimate at a query point x for a sample X_1..X_n in R^d is

    p_h(x) = 1 / (n h^d) * sum_i K((x - X_i) / h),  K(u) = exp(-|u|^2 / 2) / (2 pi)^(d/2).

Sums are exact (no tree or FFT approximation) and are computed by the backend
chosen in :mod:`richkde._backend`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import InvalidArgumentError

__all__ = [
    "Sample",
    "EvaluationGrid",
    "gaussian_kernel",
    "kde_evaluate",
    "kde_evaluate_grid",
    "kde_evaluate_multi",
]

EXP_CUTOFF = 700.0


def _as_matrix(values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{what} must be a 2-D array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidArgumentError(f"{what} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Sample:
    """An immutable n x d matrix of observations.

    A 1-D input is read as n observations in one dimension.
    """

    data: np.ndarray

    def __init__(self, data):
        object.__setattr__(self, "data", _as_matrix(data, "sample"))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class EvaluationGrid:
    """An immutable m x d matrix of query points."""

    points: np.ndarray

    def __init__(self, points):
        object.__setattr__(self, "points", _as_matrix(points, "evaluation grid"))

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def gaussian_kernel(u, d: int) -> float:
    """Standard d-dimensional Gaussian kernel at ``u``."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if d < 1 or u.shape[0] != d:
        raise InvalidArgumentError(f"kernel argument has length {u.shape[0]}, expected d={d}")
    if not np.all(np.isfinite(u)):
        raise InvalidArgumentError("kernel argument must be finite")
    a = 0.5 * float(np.dot(u, u))
    if a > EXP_CUTOFF:
        return 0.0
    return math.exp(-a) / (2.0 * math.pi) ** (d / 2.0)


def _check_bandwidths(bandwidths) -> np.ndarray:
    hs = np.atleast_1d(np.asarray(bandwidths, dtype=np.float64))
    if hs.ndim != 1 or hs.size == 0:
        raise InvalidArgumentError("bandwidths must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(hs)) or np.any(hs <= 0):
        raise InvalidArgumentError("bandwidths must be finite and strictly positive")
    return hs


def _as_points(sample: Sample, points) -> np.ndarray:
    if isinstance(points, EvaluationGrid):
        pts = points.points
    else:
        pts = _as_matrix(points, "evaluation grid")
    if pts.shape[1] != sample.d:
        raise InvalidArgumentError(
            f"query dimension {pts.shape[1]} does not match sample dimension {sample.d}")
    return pts


def kde_evaluate_multi(sample: Sample, bandwidths, grid, backend: str | None = None) -> np.ndarray:
    """Evaluate the KDE at every grid point for several bandwidths at once.

    Returns an m x r array whose column k is ``kde_evaluate_grid(sample, h_k, grid)``.
    Sharing the pairwise distances across bandwidths is what makes Monte Carlo
    sweeps cheap.
    """
    hs = _check_bandwidths(bandwidths)
    pts = _as_points(sample, grid)
    sums = _backend.get_gaussian_sums(backend)(sample.data, pts, hs)
    norm = sample.n * hs ** sample.d * (2.0 * math.pi) ** (sample.d / 2.0)
    return sums / norm


def kde_evaluate_grid(sample: Sample, h: float, grid, backend: str | None = None) -> np.ndarray:
    """KDE with bandwidth ``h`` at each point of ``grid``; returns an m-vector."""
    return kde_evaluate_multi(sample, [h], grid, backend=backend)[:, 0]


def kde_evaluate(sample: Sample, h: float, x, backend: str | None = None) -> float:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != sample.d:
        raise InvalidArgumentError(
            f"query dimension {x.shape[0]} does not match sample dimension {sample.d}")
    return float(kde_evaluate_grid(sample, h, x.reshape(1, -1), backend=backend)[0])
