"""Reference distributions with exact densities and portable seeded samplers.

Random streams are pinned so results can be reproduced bit-for-bit in any
language:

* uniform bits: SplitMix64, output k (k = 0, 1, ...) is
  ``mix64(seed + (k + 1) * 0x9E3779B97F4A7C15 mod 2^64)``;
* uniforms: ``(bits >> 11) * 2^-53`` in [0, 1);
* normals: Box-Muller on consecutive uniform pairs (u1, u2),
  ``sqrt(-2 ln(1 - u1)) * (cos(2 pi u2), sin(2 pi u2))``;
* an n x d normal block consumes the first 2 * ceil(n d / 2) uniforms and is
  filled row-major; mixture component choices use the following n uniforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .kernel_core import Sample

__all__ = [
    "GOLDEN_GAMMA",
    "mix64",
    "splitmix64",
    "uniforms",
    "standard_normals",
    "ReferenceDistribution",
    "StandardNormal",
    "GaussianMixture",
    "true_density",
    "sample",
]

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def splitmix64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Outputs ``offset .. offset + count - 1`` of the SplitMix64 stream for ``seed``."""
    k = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    z = k * np.uint64(GOLDEN_GAMMA) + np.uint64(int(seed) & MASK64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, count: int, offset: int = 0) -> np.ndarray:
    bits = splitmix64(seed, count, offset)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def standard_normals(seed: int, count: int) -> np.ndarray:
    """``count`` standard normals from the pinned Box-Muller stream."""
    pairs = (count + 1) // 2
    u = uniforms(seed, 2 * pairs)
    radius = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
    angle = 2.0 * math.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count]


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) <= MASK64:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


class ReferenceDistribution:
    """Base class: a distribution with an exact density and a seeded sampler."""

    d: int

    def density(self, points) -> np.ndarray:
        raise NotImplementedError

    def sample(self, n: int, seed: int) -> Sample:
        raise NotImplementedError

    def _points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1) if pts.shape[0] == self.d else pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] != self.d:
            raise InvalidArgumentError(
                f"points have dimension {pts.shape[-1]}, distribution has d={self.d}")
        return pts

    def _normals(self, n: int, seed: int) -> np.ndarray:
        if int(n) != n or n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
        return standard_normals(_check_seed(seed), int(n) * self.d).reshape(int(n), self.d)


@dataclass(frozen=True)
class StandardNormal(ReferenceDistribution):
    d: int = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidArgumentError(f"d must be a positive integer, got {self.d!r}")

    def density(self, points) -> np.ndarray:
        pts = self._points(points)
        sq = np.einsum("ij,ij->i", pts, pts)
        return np.exp(-0.5 * sq) / (2.0 * math.pi) ** (self.d / 2.0)

    def sample(self, n: int, seed: int) -> Sample:
        return Sample(self._normals(n, seed))

    def describe(self) -> str:
        return "standard-normal"


@dataclass(frozen=True)
class GaussianMixture(ReferenceDistribution):
    """Mixture of isotropic Gaussians: sum_k w_k N(mean_k, stdev_k^2 I)."""

    weights: tuple
    means: tuple
    stdevs: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        try:
            mu = np.asarray(self.means, dtype=np.float64)
        except ValueError:
            raise InvalidArgumentError("mixture means must all have the same dimension") from None
        if mu.ndim == 1:
            mu = mu.reshape(-1, 1)
        s = np.asarray(self.stdevs, dtype=np.float64).reshape(-1)
        k = w.shape[0]
        if k < 1 or mu.shape[0] != k or s.shape[0] != k:
            raise InvalidArgumentError("mixture needs matching weights, means and stdevs")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise InvalidArgumentError("mixture weights must be nonnegative and sum to 1")
        if np.any(s <= 0) or not np.all(np.isfinite(mu)) or not np.all(np.isfinite(s)):
            raise InvalidArgumentError("mixture stdevs must be positive and means finite")
        object.__setattr__(self, "weights", tuple(w.tolist()))
        object.__setattr__(self, "means", tuple(tuple(row) for row in mu.tolist()))
        object.__setattr__(self, "stdevs", tuple(s.tolist()))

    @classmethod
    def from_components(cls, components) -> "GaussianMixture":
        """Build from ``[(weight, mean, stdev), ...]``; a scalar mean means d = 1."""
        ws, mus, ss = [], [], []
        for weight, mean, stdev in components:
            ws.append(weight)
            mus.append(tuple(np.atleast_1d(np.asarray(mean, dtype=np.float64)).tolist()))
            ss.append(stdev)
        return cls(tuple(ws), tuple(mus), tuple(ss))

    @property
    def d(self) -> int:
        return len(self.means[0])

    def density(self, points) -> np.ndarray:
        pts = self._points(points)
        out = np.zeros(pts.shape[0])
        for w, mu, s in zip(self.weights, self.means, self.stdevs):
            diff = (pts - np.asarray(mu)) / s
            sq = np.einsum("ij,ij->i", diff, diff)
            out += w * np.exp(-0.5 * sq) / ((2.0 * math.pi) ** (self.d / 2.0) * s ** self.d)
        return out

    def sample(self, n: int, seed: int) -> Sample:
        z = self._normals(n, seed)
        n = z.shape[0]
        used = 2 * ((n * self.d + 1) // 2)
        u = uniforms(seed, n, offset=used)
        cum = np.cumsum(self.weights)
        comp = np.minimum(np.searchsorted(cum, u, side="right"), len(self.weights) - 1)
        mu = np.asarray(self.means)[comp]
        s = np.asarray(self.stdevs)[comp][:, None]
        return Sample(mu + s * z)

    def describe(self) -> str:
        parts = []
        for w, mu, s in zip(self.weights, self.means, self.stdevs):
            parts.append(f"{w!r}/{','.join(repr(m) for m in mu)}/{s!r}")
        return "mixture:" + ";".join(parts)


def true_density(dist: ReferenceDistribution, x) -> float | np.ndarray:
    """Exact density at a d-vector (scalar result) or at each row of an m x d array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim <= 1:
        arr = arr.reshape(1, -1)
        if arr.shape[1] != dist.d:
            raise InvalidArgumentError(
                f"point has dimension {arr.shape[1]}, distribution has d={dist.d}")
        return float(dist.density(arr)[0])
    return dist.density(arr)


def sample(dist: ReferenceDistribution, n: int, seed: int) -> Sample:
    return dist.sample(n, seed)
