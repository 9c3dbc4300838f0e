"""Richardson-extrapolated Gaussian kernel density estimation."""

from ._backend import BACKEND, available_backends
from .errors import (
    DomainError,
    IllConditionedBandwidthsError,
    IllConditionedWarning,
    InvalidArgumentError,
    NoFeasibleWeightsError,
    NumericalFailureError,
    NumericalOverflowError,
    RichKDEError,
    SingularSystemError,
)
from .kernel_core import EvaluationGrid, Sample, gaussian_kernel, kde_evaluate, kde_evaluate_grid, kde_evaluate_multi
from .extrapolation import (
    BandwidthSet,
    ExtrapolatedEstimator,
    constraint_residual,
    extrapolated_evaluate,
    extrapolated_evaluate_grid,
    lagrange_weights,
    solve_constrained_weights,
    solve_weights_linear,
)
from .selection import (
    OrderSelection,
    double_factorial,
    gaussian_bias_constant,
    lambert_w,
    optimal_bandwidth,
    optimal_order,
    spread_bandwidths,
)
from .reference import GaussianMixture, ReferenceDistribution, StandardNormal, sample, true_density
from .error_analysis import (
    MSEReport,
    RiskMatrices,
    convergence_sweep,
    empirical_mse,
    fit_power_law,
    h_pair_sweep,
    quadratic_form,
    risk_matrices,
    theoretical_variance_r2,
)

__version__ = "0.1.0"
