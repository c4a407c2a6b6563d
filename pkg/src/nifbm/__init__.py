"""Simulation and inference for window-averaged fractional Brownian
motion models: exact covariances, exact Gaussian sampling, closed-form
parameter estimators, asymptotic variances and a Monte Carlo harness."""

from .covariance import (
    AutocovSequence,
    HurstIndex,
    MixedParams,
    NifbmParams,
    autocov_sequence,
    fbm_cov,
    fbm_increment_cov,
    find_h0,
    gamma,
    gamma_asymptotic,
    increment_autocov,
    mixed_increment_autocov,
    nifbm_cov,
    nifbm_var,
)
from .errors import (
    ConfigError,
    GridMismatchError,
    HTooLargeError,
    LengthError,
    NifbmError,
    NotPositiveDefiniteError,
    ZeroDenominatorError,
)
from .simulation import (
    DriftSpec,
    IncrementSeries,
    RngSeed,
    SampleGrid,
    add_drift,
    aggregate_increments,
    cholesky_factor,
    sample_increments,
    sample_increments_circulant,
)
from .estimation import (
    DriftEstimate,
    OneNifbmEstimate,
    TwoNifbmEstimate,
    XiStatistics,
    drift_mle,
    drift_two_point,
    estimate_one_nifbm,
    estimate_two_nifbm,
    forward_moment_map,
    forward_moment_map_one,
    two_point_variance,
    two_stage_estimate,
    xi_statistic,
    xi_statistics_from_base,
)
from .asymptotics import (
    AsymptoticCov2,
    Jacobian2,
    empirical_estimator_cov,
    gamma_square_series,
    jacobian_one,
    jacobian_one_det,
    sigma0_one,
    sigma_tilde_one,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    parse_config,
    run_experiment,
    table_configs,
    write_results,
)

__version__ = "0.1.0"
