"""Information-theoretic analysis of isotropic pairwise Gaussian Markov random fields."""
from .analysis import summarize, summarize_cov
from .entropy import (
    EntropyReport,
    beta_min_entropy,
    entropy_report,
    gaussian_entropy,
    gmrf_entropy,
    histogram_entropy,
)
from .errors import (
    DegenerateCovarianceError,
    DegenerateError,
    DegenerateFieldError,
    EmptyPatternSetError,
    GMRFError,
    InsufficientDataError,
    InvalidArgumentError,
    PGMError,
    SingularMeanError,
    UnsupportedDepthError,
    UnsupportedFormatError,
)
from .estimation import (
    EstimationReport,
    ModelParams,
    estimate_beta,
    estimate_beta_from_cov,
    estimate_mu,
    estimate_sigma2,
    fit,
    log_pseudo_likelihood,
    pl_score,
)
from .field import (
    NeighborhoodSystem,
    PatternCovariance,
    PatternSet,
    as_field,
    extract_patterns,
    make_neighborhood,
    pattern_covariance,
)
from .fisher import (
    InfoMap,
    InfoSummary,
    asymptotic_variance,
    beta_star,
    expected_phi,
    expected_psi,
    info_gap,
    l_information_map,
    local_phi_map,
    local_psi_map,
)
from .sampler import (
    PerturbationResult,
    ScheduleConfig,
    TrajectoryRecord,
    init_white_noise,
    perturb_experiment,
    run_schedule,
    sweep,
    triangle_schedule,
)

__version__ = "0.1.0"
