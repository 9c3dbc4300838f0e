"""Richardson-extrapolated KDE over several bandwidths.

The order-r estimator combines r single-bandwidth estimates with signed weights,

    p_r(x) = sum_i c_i * p_{h_i}(x),

where the weights solve R c = e_1 with R[j, i] = h_i^(2j).  The first row keeps
the estimate unbiased at order zero, the remaining rows cancel the h^2 ... h^(2r-2)
bias terms.  R is a Vandermonde matrix in h^2 and degrades quickly with r, so the
production path uses the Lagrange closed form

    c_i = prod_{j != i} (-h_j^2 / (h_i^2 - h_j^2))

and keeps the dense solve only as an oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IllConditionedBandwidthsError,
    IllConditionedWarning,
    InvalidArgumentError,
    NoFeasibleWeightsError,
    NumericalFailureError,
    SingularSystemError,
)
from .kernel_core import Sample, kde_evaluate_multi

__all__ = [
    "SEPARATION_THRESHOLD",
    "MAX_WEIGHT",
    "BandwidthSet",
    "ExtrapolatedEstimator",
    "lagrange_weights",
    "solve_weights_linear",
    "constraint_residual",
    "check_weights",
    "combine",
    "moment_matrix",
    "extrapolated_evaluate",
    "extrapolated_evaluate_grid",
    "solve_constrained_weights",
    "clamp_for_display",
]

SEPARATION_THRESHOLD = 1e-6
MAX_WEIGHT = 1e8
SUM_TOL = 1e-10
MOMENT_TOL = 1e-8
_CONSTRAINT_TOL = 1e-10


@dataclass(frozen=True)
class BandwidthSet:
    """Sorted, strictly positive bandwidths h_1 < ... < h_r.

    With ``enforce_separation=False`` only positivity and finiteness are checked;
    the dense-solve oracle uses this to accept nearly coincident values.
    """

    values: tuple
    enforce_separation: bool = field(default=True, compare=False)

    def __post_init__(self):
        try:
            vals = tuple(sorted(float(h) for h in np.atleast_1d(self.values)))
        except (TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"bandwidths must be real numbers: {exc}") from None
        if not vals:
            raise InvalidArgumentError("at least one bandwidth is required")
        if not all(math.isfinite(h) and h > 0 for h in vals):
            raise InvalidArgumentError("bandwidths must be finite and strictly positive")
        object.__setattr__(self, "values", vals)
        if self.enforce_separation and self.separation() < SEPARATION_THRESHOLD:
            raise IllConditionedBandwidthsError(
                f"bandwidths {vals} are too close: relative separation of squares "
                f"{self.separation():.3g} < {SEPARATION_THRESHOLD:g}; spread the h values")

    @property
    def r(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)

    def separation(self) -> float:
        """min |h_i^2 - h_j^2| / max h^2 over i != j (inf for a single bandwidth)."""
        sq = [h * h for h in self.values]
        if len(sq) < 2:
            return math.inf
        gap = min(b - a for a, b in zip(sq, sq[1:]))
        return gap / sq[-1]


def _bandwidth_set(bandwidths, enforce_separation=True) -> BandwidthSet:
    if isinstance(bandwidths, BandwidthSet):
        return bandwidths
    return BandwidthSet(tuple(np.atleast_1d(bandwidths)), enforce_separation=enforce_separation)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def lagrange_weights(bandwidths) -> np.ndarray:
    """Richardson weights from the Lagrange closed form (no matrix is formed)."""
    bw = _bandwidth_set(bandwidths)
    if bw.enforce_separation is False and bw.separation() < SEPARATION_THRESHOLD:
        raise IllConditionedBandwidthsError(
            f"bandwidths {bw.values} violate the separation threshold")
    sq = [h * h for h in bw.values]
    weights = []
    for i, hi2 in enumerate(sq):
        weights.append(math.prod(-hj2 / (hi2 - hj2) for j, hj2 in enumerate(sq) if j != i))
    return _frozen(weights)


def moment_matrix(bandwidths) -> np.ndarray:
    """The r x r matrix R with R[j, i] = h_i^(2j)."""
    hs2 = _bandwidth_set(bandwidths, enforce_separation=False).as_array() ** 2
    return np.vander(hs2, increasing=True).T


def solve_weights_linear(bandwidths) -> np.ndarray:
    """Solve R c = e_1 by dense LU with partial pivoting.

    The raw solution is returned as-is.  An :class:`IllConditionedWarning` is
    issued when the forward-error bound cond(R) * eps or the constraint residual
    exceeds the 1e-8 budget.
    """
    bw = _bandwidth_set(bandwidths, enforce_separation=False)
    R = moment_matrix(bw)
    rhs = np.zeros(bw.r)
    rhs[0] = 1.0
    try:
        c = np.linalg.solve(R, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"weight system is singular for h={bw.values}") from exc
    if not np.all(np.isfinite(c)):
        raise SingularSystemError(f"weight system is singular for h={bw.values}")

    cond = np.linalg.cond(R)
    resid = float(np.max(np.abs(constraint_residual(bw, c))))
    error_bound = cond * np.finfo(float).eps
    if not math.isfinite(error_bound) or error_bound > MOMENT_TOL or resid > MOMENT_TOL:
        warnings.warn(
            f"dense weight solve is unreliable: cond={cond:.3g}, "
            f"forward-error bound={error_bound:.3g}, residual={resid:.3g}",
            IllConditionedWarning,
            stacklevel=2,
        )
    return _frozen(c)


def constraint_residual(bandwidths, weights) -> np.ndarray:
    """Residuals of the Richardson constraints.

    Entry 0 is sum(c) - 1; entry j >= 1 is the relative moment residual
    sum(c_i h_i^(2j)) / sum(|c_i| h_i^(2j)).
    """
    bw = _bandwidth_set(bandwidths, enforce_separation=False)
    c = np.asarray(weights, dtype=np.float64).reshape(-1)
    if c.shape[0] != bw.r:
        raise InvalidArgumentError(f"{c.shape[0]} weights for {bw.r} bandwidths")
    sq = bw.as_array() ** 2
    out = np.empty(bw.r)
    out[0] = math.fsum(c) - 1.0
    for j in range(1, bw.r):
        powers = sq ** j
        den = math.fsum(np.abs(c) * powers)
        out[j] = math.fsum(c * powers) / den if den > 0 else 0.0
    return out


def check_weights(bandwidths, weights, require_moments: bool = True) -> np.ndarray:
    """Validate weights for use with ``bandwidths`` and return them read-only.

    Rejects a length mismatch, max |c_i| above ``MAX_WEIGHT``, a sum off 1 by more
    than 1e-10 and, when ``require_moments``, relative moment residuals above 1e-8.
    """
    bw = _bandwidth_set(bandwidths)
    c = _frozen(np.asarray(weights, dtype=np.float64).reshape(-1))
    if c.shape[0] != bw.r:
        raise InvalidArgumentError(f"{c.shape[0]} weights for {bw.r} bandwidths")
    if not np.all(np.isfinite(c)) or np.max(np.abs(c)) > MAX_WEIGHT:
        raise IllConditionedBandwidthsError(
            f"max |c_i| = {np.max(np.abs(c)):.3g} exceeds {MAX_WEIGHT:g}; "
            "the signed combination would lose all significant digits")
    res = constraint_residual(bw, c)
    if abs(res[0]) > SUM_TOL:
        raise InvalidArgumentError(f"weights sum to {1.0 + res[0]!r}, not 1")
    if require_moments and res.size > 1 and np.max(np.abs(res[1:])) > MOMENT_TOL:
        raise InvalidArgumentError(
            f"weights violate the moment constraints (max residual {np.max(np.abs(res[1:])):.3g})")
    return c


@dataclass(frozen=True, eq=False)
class ExtrapolatedEstimator:
    """A sample with bandwidths and signed weights, validated at construction.

    ``require_moments=False`` keeps only the sum-to-one check; weights from
    :func:`solve_constrained_weights` trade the moment rows for a variance/bias
    balance and would otherwise be rejected.
    """

    sample: Sample
    bandwidths: BandwidthSet
    weights: np.ndarray
    require_moments: bool = True

    def __post_init__(self):
        if not isinstance(self.sample, Sample):
            object.__setattr__(self, "sample", Sample(self.sample))
        object.__setattr__(self, "bandwidths", _bandwidth_set(self.bandwidths))
        c = check_weights(self.bandwidths, self.weights, require_moments=self.require_moments)
        object.__setattr__(self, "weights", c)

    @classmethod
    def from_bandwidths(cls, sample, bandwidths) -> "ExtrapolatedEstimator":
        bw = _bandwidth_set(bandwidths)
        return cls(sample if isinstance(sample, Sample) else Sample(sample), bw, lagrange_weights(bw))

    @property
    def r(self) -> int:
        return self.bandwidths.r


def combine(per_bandwidth: np.ndarray, weights) -> np.ndarray:
    """Weighted sum over the last axis, accumulated in a fixed order."""
    weights = np.asarray(weights, dtype=np.float64)
    out = per_bandwidth[..., 0] * weights[0]
    for k in range(1, weights.shape[0]):
        out = out + per_bandwidth[..., k] * weights[k]
    return out


def extrapolated_evaluate_grid(est: ExtrapolatedEstimator, grid, backend=None) -> np.ndarray:
    """Signed extrapolated estimate at each grid point (no clamping)."""
    per_h = kde_evaluate_multi(est.sample, est.bandwidths.values, grid, backend=backend)
    return combine(per_h, est.weights)


def extrapolated_evaluate(est: ExtrapolatedEstimator, x, backend=None) -> float:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != est.sample.d:
        raise InvalidArgumentError(
            f"query dimension {x.shape[0]} does not match sample dimension {est.sample.d}")
    return float(extrapolated_evaluate_grid(est, x.reshape(1, -1), backend=backend)[0])


def clamp_for_display(values, cell_volume: float | None = None) -> np.ndarray:
    """Clamp negative densities to zero for presentation.

    With ``cell_volume`` the clamped values are rescaled so their grid mass
    matches that of the signed values.  Never use this inside error analysis.
    """
    values = np.asarray(values, dtype=np.float64)
    clamped = np.maximum(values, 0.0)
    if cell_volume is not None:
        signed_mass = values.sum() * cell_volume
        clamped_mass = clamped.sum() * cell_volume
        if clamped_mass > 0 and signed_mass > 0:
            clamped = clamped * (signed_mass / clamped_mass)
    return clamped


def _check_pair_matrix(M, name) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (2, 2) or not np.all(np.isfinite(M)):
        raise InvalidArgumentError(f"{name} must be a finite 2x2 matrix")
    if abs(M[0, 1] - M[1, 0]) > 1e-12 * max(np.max(np.abs(M)), 1e-300):
        raise InvalidArgumentError(f"{name} must be symmetric")
    return M


def solve_constrained_weights(bandwidths, V, B) -> np.ndarray:
    """Weights on c1 + c2 = 1 that balance variance and squared bias.

    Solves c^T V c = c^T B c along the line c2 = 1 - c1, which is a quadratic
    in c1.  Among real roots the one with the smallest c^T V c + c^T B c wins.
    When V == B every point on the line qualifies and the Richardson weights are
    returned.  Only r = 2 is supported.
    """
    bw = _bandwidth_set(bandwidths)
    if bw.r != 2:
        raise InvalidArgumentError("constrained weights are implemented for r = 2 only")
    V = _check_pair_matrix(V, "V")
    B = _check_pair_matrix(B, "B")
    M = V - B
    scale = max(np.max(np.abs(V)), np.max(np.abs(B)), 1e-300)
    tiny = 1e-14 * scale

    # q(c1) = a c1^2 + b c1 + k for c = (c1, 1 - c1)
    a = M[0, 0] - 2.0 * M[0, 1] + M[1, 1]
    b = 2.0 * (M[0, 1] - M[1, 1])
    k = M[1, 1]

    if abs(a) < tiny and abs(b) < tiny and abs(k) < tiny:
        return lagrange_weights(bw)
    if abs(a) < tiny:
        if abs(b) < tiny:
            raise NoFeasibleWeightsError("constraint reduces to a nonzero constant")
        roots = [-k / b]
    else:
        disc = b * b - 4.0 * a * k
        if disc < 0:
            raise NoFeasibleWeightsError(
                f"no real weights balance variance and bias for h={bw.values}")
        sq = math.sqrt(disc)
        qq = -0.5 * (b + math.copysign(sq, b))
        roots = [qq / a]
        if qq != 0:
            roots.append(k / qq)

    def q(c1):
        return (a * c1 + b) * c1 + k

    def polish(c1):
        for _ in range(3):
            slope = 2.0 * a * c1 + b
            if slope == 0:
                break
            c1 = c1 - q(c1) / slope
        return c1

    best = None
    for c1 in roots:
        c1 = polish(c1)
        c = np.array([c1, 1.0 - c1])
        var, bias2 = float(c @ V @ c), float(c @ B @ c)
        if best is None or var + bias2 < best[0]:
            best = (var + bias2, c, var, bias2)

    _, c, var, bias2 = best
    if abs(var - bias2) > _CONSTRAINT_TOL * max(abs(var), abs(bias2), 1e-300):
        raise NumericalFailureError(
            f"constrained weights missed the balance constraint: {var!r} vs {bias2!r}")
    return _frozen(c)
