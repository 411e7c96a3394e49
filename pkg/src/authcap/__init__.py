"""Capacity regions (secret-key, storage, privacy-leakage) for
identifier-based authentication systems with ordered authentication
channels, plus a desk-scale random-binning protocol simulator."""

__version__ = "0.1.0"

from .infotheory import (
    Channel,
    DiscreteDistribution,
    InfoUnit,
    JointDistribution,
    binary_entropy,
    binary_entropy_inverse,
    compose_channels,
    conditional_mutual_information,
    convolve,
    entropy,
    mutual_information,
)
from .classifier import (
    Certainty,
    ChannelOrderVerdict,
    Relation,
    classify_ac,
    is_less_noisy,
    is_more_capable,
    is_stochastically_degraded,
)
from .regions import (
    AuthModel,
    RateCorner,
    RegionBoundary,
    SamplerConfig,
    UnsupportedClassError,
    compare_regions,
    eval_one_aux,
    eval_two_aux,
    pareto_filter,
    zero_key_region,
    region_contains,
    sweep_region,
    two_aux_random_search,
)
from .binary import (
    BinaryModelParams,
    convolution_bounds,
    entropy_convolution_check,
    closed_form_corner,
    closed_form_region,
)
from .gaussian import (
    CovarianceMatrix,
    GaussianModelParams,
    build_covariance,
    parametric_corner,
    parametric_region,
    covariance_mc_diagnostic,
    gaussian_mi,
    zero_key_region_gaussian,
)
from .protocol import (
    Codebook,
    SimConfig,
    SimLimitError,
    SimReport,
    authenticate,
    enroll,
    exact_leakage,
    generate_codebook,
    run_simulation,
    wilson_interval,
)
