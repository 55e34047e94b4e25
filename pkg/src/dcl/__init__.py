"""Divide-and-color model toolkit.

Bond percolation on a finite box, one i.i.d. color per cluster, and the
estimators, limit laws, and experiment harnesses that tie the simulated
fields to their predicted large-volume behavior.
"""

from .coloring import (
    ColorField,
    ColorMeasure,
    FiniteDiscrete,
    GaussianLaw,
    TwoPoint,
    color_clusters,
    field_mean,
    moments,
    parse_color_measure,
)
from .harness import (
    MODE_ANNEALED,
    MODE_QUENCHED,
    MODES,
    ExperimentConfig,
    RegimeMismatchError,
    RunResult,
    run_annealed_clt,
    run_annealed_lln,
    run_cluster_clt,
    run_quenched_clt,
    run_quenched_lln,
    run_weighted_lln_check,
)
from .lattice import BoxLattice, build_box, inner_window, window_site_count
from .percolation import (
    NEAR_CRITICAL_BAND,
    PROXY_BOUNDARY_LARGEST,
    PROXY_DISABLED,
    PROXY_RULES,
    ClusterLabeling,
    EdgeConfig,
    InvariantViolationError,
    NearCriticalWarning,
    PercolationEstimates,
    SigmaP2Estimate,
    connectivity_profile,
    default_window_margin,
    estimate_functionals,
    estimate_sigma_p2,
    label_clusters,
    labeling_functionals,
    sample_config,
    square_sum_density,
    square_sums,
)
from .rng import derive_key, derive_rng
from .stats import (
    SampleSummary,
    TestReport,
    exact_check_report,
    gaussian_cdf,
    kolmogorov_sf,
    ks_one_sample_gaussian,
    ks_two_sample,
    summarize,
    summarize_onepass,
    tv_distance_discrete,
)
from .theory import (
    REGIME_SUBCRITICAL,
    REGIME_SUPERCRITICAL,
    REGIMES,
    GaussianMixture,
    LimitLaw,
    PointMass,
    SampledLaw,
    TwoPointLaw,
    covariance_prediction,
    gamma_law,
    gamma_prime_moment,
    gamma_sampler,
    is_gamma_gaussian,
    lln_limit_law,
    sign_deterministic,
    two_point_magnetization,
)

__version__ = "0.1.0"

__all__ = [
    "BoxLattice",
    "ClusterLabeling",
    "ColorField",
    "ColorMeasure",
    "EdgeConfig",
    "ExperimentConfig",
    "FiniteDiscrete",
    "GaussianLaw",
    "GaussianMixture",
    "InvariantViolationError",
    "LimitLaw",
    "MODES",
    "MODE_ANNEALED",
    "MODE_QUENCHED",
    "NEAR_CRITICAL_BAND",
    "NearCriticalWarning",
    "PROXY_BOUNDARY_LARGEST",
    "PROXY_DISABLED",
    "PROXY_RULES",
    "PercolationEstimates",
    "PointMass",
    "REGIMES",
    "REGIME_SUBCRITICAL",
    "REGIME_SUPERCRITICAL",
    "RegimeMismatchError",
    "RunResult",
    "SampleSummary",
    "SampledLaw",
    "SigmaP2Estimate",
    "TestReport",
    "TwoPoint",
    "TwoPointLaw",
    "build_box",
    "color_clusters",
    "connectivity_profile",
    "covariance_prediction",
    "default_window_margin",
    "derive_key",
    "derive_rng",
    "estimate_functionals",
    "estimate_sigma_p2",
    "exact_check_report",
    "field_mean",
    "gamma_law",
    "gamma_prime_moment",
    "gamma_sampler",
    "gaussian_cdf",
    "inner_window",
    "is_gamma_gaussian",
    "kolmogorov_sf",
    "ks_one_sample_gaussian",
    "ks_two_sample",
    "label_clusters",
    "labeling_functionals",
    "lln_limit_law",
    "moments",
    "parse_color_measure",
    "run_annealed_clt",
    "run_annealed_lln",
    "run_cluster_clt",
    "run_quenched_clt",
    "run_quenched_lln",
    "run_weighted_lln_check",
    "sample_config",
    "sign_deterministic",
    "square_sum_density",
    "square_sums",
    "summarize",
    "summarize_onepass",
    "tv_distance_discrete",
    "two_point_magnetization",
    "window_site_count",
]
