"""Monte Carlo and closed-form error analysis for (extrapolated) KDE.

Every trial draws a fresh sample from a reference distribution with a seed
derived from the base seed, evaluates the estimator on a fixed grid, and the
trials are reduced pointwise into bias, variance and MSE.  Variance uses the
1/T normalisation so that mse = variance + bias^2 holds exactly in sample form.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, RichKDEError
from .extrapolation import (
    BandwidthSet,
    check_weights,
    combine,
    lagrange_weights,
    solve_constrained_weights,
)
from .kernel_core import EvaluationGrid, kde_evaluate_multi
from .reference import GOLDEN_GAMMA, MASK64, ReferenceDistribution, mix64
from .selection import DEFAULT_SPREAD_RATIO, optimal_bandwidth, spread_bandwidths

__all__ = [
    "MSEReport",
    "RiskMatrices",
    "SweepRow",
    "ConvergenceSweep",
    "PairSweep",
    "trial_seed",
    "simulate_estimates",
    "empirical_mse",
    "theoretical_variance_r2",
    "risk_matrices",
    "quadratic_form",
    "fit_power_law",
    "convergence_sweep",
    "h_pair_sweep",
    "default_grid",
]


def trial_seed(seed: int, t: int) -> int:
    """Seed for trial ``t``: mix64(seed XOR golden * t)."""
    return mix64((int(seed) ^ (GOLDEN_GAMMA * int(t))) & MASK64)


def thread_count() -> int:
    raw = os.environ.get("RICHKDE_THREADS")
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"RICHKDE_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidArgumentError(f"RICHKDE_THREADS must be a positive integer, got {raw!r}")
    return value


def default_grid(d: int = 1) -> EvaluationGrid:
    """-2 to 2 in steps of 0.5 along every axis (9^d points)."""
    axis = np.arange(-4, 5) * 0.5
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return EvaluationGrid(np.stack([m.reshape(-1) for m in mesh], axis=1))


def _grid(grid, d) -> EvaluationGrid:
    if grid is None:
        return default_grid(d)
    g = grid if isinstance(grid, EvaluationGrid) else EvaluationGrid(grid)
    if g.d != d:
        raise InvalidArgumentError(f"grid dimension {g.d} does not match distribution dimension {d}")
    return g


@dataclass(frozen=True, eq=False)
class MSEReport:
    """Pointwise Monte Carlo error summary on an evaluation grid."""

    eval_points: np.ndarray
    trials: int
    truth: np.ndarray
    mean_estimate: np.ndarray
    empirical_bias: np.ndarray
    empirical_variance: np.ndarray
    empirical_mse: np.ndarray
    mc_standard_error: np.ndarray
    n: int
    d: int
    r: int
    bandwidths: tuple
    weights: tuple
    seed: int
    # grid-averaged MSE of each trial; gives the standard error of mean_mse
    trial_mse: np.ndarray = field(repr=False)

    @property
    def mean_mse(self) -> float:
        """Uniform average of the pointwise MSE over the grid."""
        return float(np.mean(self.empirical_mse))

    @property
    def mean_mse_stderr(self) -> float:
        return float(np.std(self.trial_mse, ddof=1) / math.sqrt(self.trials))

    def identity_residual(self) -> float:
        """max |mse - (variance + bias^2)| / max(mse, 1e-300) over the grid."""
        gap = np.abs(self.empirical_mse - (self.empirical_variance + self.empirical_bias ** 2))
        return float(np.max(gap / np.maximum(self.empirical_mse, 1e-300)))


def _summarize(estimates, truth, *, grid, n, d, bandwidths, weights, seed) -> MSEReport:
    trials = estimates.shape[0]
    mean = estimates.mean(axis=0)
    bias = mean - truth
    variance = np.mean((estimates - mean) ** 2, axis=0)
    sq_err = (estimates - truth) ** 2
    mse = sq_err.mean(axis=0)
    stderr = sq_err.std(axis=0, ddof=1) / math.sqrt(trials)
    return MSEReport(
        eval_points=grid.points, trials=trials, truth=truth, mean_estimate=mean,
        empirical_bias=bias, empirical_variance=variance, empirical_mse=mse,
        mc_standard_error=stderr, n=n, d=d, r=len(bandwidths),
        bandwidths=tuple(float(h) for h in bandwidths),
        weights=tuple(float(c) for c in weights), seed=seed,
        trial_mse=sq_err.mean(axis=1),
    )


def simulate_estimates(dist: ReferenceDistribution, n: int, bandwidths, grid, trials: int,
                       seed: int, *, seeds=None, backend=None) -> np.ndarray:
    """Single-bandwidth KDE values for every trial: a T x m x len(bandwidths) array.

    Trial t uses ``seeds[t]`` when given, otherwise ``trial_seed(seed, t)``.
    Trials may run on several threads; each writes only its own slice, so the
    result does not depend on the thread count.
    """
    g = _grid(grid, dist.d)
    hs = np.atleast_1d(np.asarray(bandwidths, dtype=np.float64))
    if seeds is None:
        seeds = [trial_seed(seed, t) for t in range(trials)]
    elif len(seeds) != trials:
        raise InvalidArgumentError(f"{len(seeds)} explicit seeds for {trials} trials")
    out = np.empty((trials, g.m, hs.shape[0]))

    def run(t):
        s = dist.sample(n, seeds[t])
        out[t] = kde_evaluate_multi(s, hs, g, backend=backend)

    workers = min(thread_count(), trials)
    if workers <= 1:
        for t in range(trials):
            run(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(trials)))
    return out


def empirical_mse(dist: ReferenceDistribution, n: int, bandwidths, weights, grid, trials: int,
                  seed: int, *, seeds=None, require_moments: bool = True, backend=None) -> MSEReport:
    """Monte Carlo bias, variance and MSE of the extrapolated estimator on ``grid``."""
    if int(trials) != trials or trials < 2:
        raise InvalidArgumentError(f"trials must be an integer >= 2, got {trials!r}")
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    bw = bandwidths if isinstance(bandwidths, BandwidthSet) else BandwidthSet(tuple(np.atleast_1d(bandwidths)))
    c = check_weights(bw, weights, require_moments=require_moments)
    g = _grid(grid, dist.d)
    per_h = simulate_estimates(dist, int(n), bw.values, g, int(trials), seed, seeds=seeds, backend=backend)
    truth = dist.density(g.points)
    return _summarize(combine(per_h, c), truth, grid=g, n=int(n), d=dist.d,
                      bandwidths=bw.values, weights=c, seed=int(seed))


def theoretical_variance_r2(p_at_x: float, n: int, h, c, d: int) -> float:
    """Closed-form leading-order variance of the two-bandwidth estimator.

    p(x) / (n (2 pi)^(d/2)) * (c1^2/h1^d + c2^2/h2^d + 2 sqrt(2) c1 c2 / (h1^2 + h2^2)^(d/2)).
    The 2 sqrt(2) cross-term constant is kept as is; for d = 1 the exact variance
    under a normal sample is roughly half of this value.
    """
    h1, h2 = (h.values if isinstance(h, BandwidthSet) else tuple(np.asarray(h, dtype=float).reshape(-1)))
    c1, c2 = np.asarray(c, dtype=np.float64).reshape(-1)
    if not (p_at_x > 0 and n >= 1 and h1 > 0 and h2 > 0 and d >= 1):
        raise InvalidArgumentError("theoretical_variance_r2 needs p(x) > 0, n >= 1, h > 0, d >= 1")
    bracket = (c1 * c1 / h1 ** d + c2 * c2 / h2 ** d
               + 2.0 * math.sqrt(2.0) * c1 * c2 / (h1 * h1 + h2 * h2) ** (d / 2.0))
    return float(p_at_x / (n * (2.0 * math.pi) ** (d / 2.0)) * bracket)


@dataclass(frozen=True, eq=False)
class RiskMatrices:
    V: np.ndarray
    B: np.ndarray
    n: int
    d: int


def risk_matrices(bandwidths, n: int, d: int) -> RiskMatrices:
    """Variance and bias matrices over the weight vector.

    V_ii = 1/(n h_i^d), V_ij = sqrt(2) / (n (h_i^2 + h_j^2)^(d/2)), B_ij = h_i^2 h_j^2.
    Density-dependent prefactors are deliberately left out.
    """
    bw = bandwidths if isinstance(bandwidths, BandwidthSet) else BandwidthSet(tuple(np.atleast_1d(bandwidths)))
    h = bw.as_array()
    sq = h * h
    V = math.sqrt(2.0) / (n * (sq[:, None] + sq[None, :]) ** (d / 2.0))
    np.fill_diagonal(V, 1.0 / (n * h ** d))
    B = np.outer(sq, sq)
    return RiskMatrices(V=V, B=B, n=int(n), d=int(d))


def quadratic_form(c, M) -> float:
    """c^T M c."""
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (c.shape[0], c.shape[0]):
        raise InvalidArgumentError(f"matrix of shape {M.shape} does not match {c.shape[0]} weights")
    return float(c @ M @ c)


def fit_power_law(ns, mses) -> tuple[float, float]:
    """Ordinary least squares of ln(mse) on ln(n); returns (slope, intercept)."""
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(mses, dtype=np.float64))
    if x.shape != y.shape or x.shape[0] < 2:
        raise InvalidArgumentError("need at least two (n, mse) pairs")
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    return slope, float(ym - slope * xm)


@dataclass(frozen=True)
class SweepRow:
    n: int
    h_star: float
    mse: float
    stderr: float


@dataclass(frozen=True, eq=False)
class ConvergenceSweep:
    slope: float
    intercept: float
    table: list
    reports: list


def convergence_sweep(dist: ReferenceDistribution, d: int, r: int, n_list, trials: int, grid,
                      seed: int, spread_ratio: float = DEFAULT_SPREAD_RATIO, backend=None) -> ConvergenceSweep:
    """Grid-averaged MSE at h*(n, d, r) for each n, with a log-log slope fit.

    Every n uses the same base seed, so the samples for different n share a prefix.
    """
    if d != dist.d:
        raise InvalidArgumentError(f"d={d} does not match the distribution (d={dist.d})")
    n_list = [int(n) for n in n_list]
    if len(n_list) < 4 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidArgumentError("n_list must be strictly increasing with at least 4 entries")
    g = _grid(grid, d)
    rows, reports = [], []
    for n in n_list:
        h_star = optimal_bandwidth(n, d, r)
        bw = spread_bandwidths(h_star, r, spread_ratio)
        report = empirical_mse(dist, n, bw, lagrange_weights(bw), g, trials, seed, backend=backend)
        reports.append(report)
        rows.append(SweepRow(n=n, h_star=h_star, mse=report.mean_mse, stderr=report.mean_mse_stderr))
    slope, intercept = fit_power_law([row.n for row in rows], [row.mse for row in rows])
    return ConvergenceSweep(slope=slope, intercept=intercept, table=rows, reports=reports)


@dataclass(frozen=True, eq=False)
class PairSweep:
    """MSE over a grid of bandwidth pairs; NaN marks a missing cell.

    ``weights[i, j]`` is ordered like the sorted pair (min h first).
    ``single_mse`` maps every bandwidth in either list to its r = 1 MSE from the
    same simulated trials.
    """

    h1: np.ndarray
    h2: np.ndarray
    mode: str
    mse: np.ndarray
    stderr: np.ndarray
    weights: np.ndarray
    missing: dict
    single_mse: dict
    reports: dict

    def best_cell(self):
        if np.all(np.isnan(self.mse)):
            return None
        i, j = np.unravel_index(np.nanargmin(self.mse), self.mse.shape)
        return int(i), int(j), float(self.mse[i, j])


def h_pair_sweep(dist: ReferenceDistribution, d: int, n: int, h1_list, h2_list, trials: int, grid,
                 seed: int, mode: str = "richardson", backend=None) -> PairSweep:
    """Two-bandwidth MSE surface.

    All cells share one set of simulated trials (common random numbers): each
    cell equals ``empirical_mse`` called with the same seed.  A cell whose
    weights cannot be formed is reported missing and the sweep continues.
    """
    if mode not in ("richardson", "constrained"):
        raise InvalidArgumentError(f"mode must be 'richardson' or 'constrained', got {mode!r}")
    if d != dist.d:
        raise InvalidArgumentError(f"d={d} does not match the distribution (d={dist.d})")
    h1 = np.asarray(h1_list, dtype=np.float64).reshape(-1)
    h2 = np.asarray(h2_list, dtype=np.float64).reshape(-1)
    if h1.size == 0 or h2.size == 0 or np.any(h1 <= 0) or np.any(h2 <= 0):
        raise InvalidArgumentError("bandwidth lists must be non-empty and positive")
    if int(trials) != trials or trials < 2:
        raise InvalidArgumentError(f"trials must be an integer >= 2, got {trials!r}")

    g = _grid(grid, d)
    unique = np.unique(np.concatenate([h1, h2]))
    column = {float(h): k for k, h in enumerate(unique)}
    per_h = simulate_estimates(dist, int(n), unique, g, int(trials), seed, backend=backend)
    truth = dist.density(g.points)

    def report_for(hs, c):
        cols = [column[h] for h in hs]
        return _summarize(combine(per_h[:, :, cols], c), truth, grid=g, n=int(n), d=d,
                          bandwidths=hs, weights=c, seed=int(seed))

    single = {float(h): report_for((float(h),), np.array([1.0])).mean_mse for h in unique}

    mse = np.full((h1.size, h2.size), np.nan)
    stderr = np.full_like(mse, np.nan)
    weights = np.full((h1.size, h2.size, 2), np.nan)
    missing, reports = {}, {}
    for i, a in enumerate(h1):
        for j, b in enumerate(h2):
            try:
                bw = BandwidthSet((float(a), float(b)))
                if mode == "richardson":
                    c = lagrange_weights(bw)
                    c = check_weights(bw, c)
                else:
                    risk = risk_matrices(bw, n, d)
                    c = check_weights(bw, solve_constrained_weights(bw, risk.V, risk.B),
                                      require_moments=False)
            except RichKDEError as exc:
                missing[(i, j)] = f"{type(exc).__name__}: {exc}"
                continue
            rep = report_for(bw.values, c)
            reports[(i, j)] = rep
            mse[i, j] = rep.mean_mse
            stderr[i, j] = rep.mean_mse_stderr
            weights[i, j] = c
    return PairSweep(h1=h1, h2=h2, mode=mode, mse=mse, stderr=stderr, weights=weights,
                     missing=missing, single_mse=single, reports=reports)
