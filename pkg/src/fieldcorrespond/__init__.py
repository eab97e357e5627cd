"""Discrete multivariate fields: stationary, self-similar, and
stationary-increment classes, with the exact correspondences between them.

The package provides the matrix-tuple algebra, windowed field containers,
the Lamperti and increment-summation bijections, AR(1) verification,
fractional Brownian sheet sampling, the two fractional
Ornstein-Uhlenbeck constructions, and ensemble statistics, plus the
``field-correspond`` command-line entry point.
"""

__version__ = "0.1.0"

from .algebra import (
    COMMUTATION_RTOL,
    SYMMETRY_RTOL,
    ThetaTuple,
    check_commuting,
    commutation_defect,
    mat_exp_sym,
    min_eigenvalue,
    spectral_norm,
    star_apply,
    star_index,
)
from .ar1 import (
    Ar1System,
    ar1_drift,
    ar1_residual,
    drift_field,
    edge_decay_norms,
    noise_from_stationary,
    stationary_solution,
    verify_ar1,
)
from .errors import (
    CommutationError,
    ConfigError,
    DimensionMismatchError,
    FieldCorrespondError,
    NumericRangeError,
    VerificationError,
    WindowError,
)
from .fields import (
    CLOCKS,
    FieldWindow,
    Window,
    load_field,
    previous_value,
    read_csv,
    rect_from_units,
    rect_increment,
    save_field,
    unit_increment,
    unit_increment_field,
    write_csv,
)
from .fou import (
    FouConfig,
    derive_theta,
    fou_batch,
    fou_field,
    fou_first_kind,
    fou_noise,
    fou_second_kind,
    mixing_commutes,
)
from .gaussian import (
    EXP_CLOCK_LIMIT,
    GRID_CAP,
    HurstSpec,
    SampleBatch,
    SheetSampler,
    build_cov_matrix,
    factor_covariance,
    fbs_cov,
    load_batch,
    sample_multivariate_sheet,
    sample_sheet_batch,
    sheet_points,
    substream,
)
from .stats import (
    ComparisonRow,
    EnsembleReport,
    MomentSummary,
    bonferroni_threshold,
    empirical_moments,
    fidelity_check,
    increment_stationarity_check,
    jackknife_se_mean,
    self_similarity_check,
    stationarity_check,
)
from .transforms import (
    TruncationPolicy,
    lamperti,
    lamperti_inv,
    m_forward,
    m_inverse_truncated,
    tail_bound_value,
    truncation_depth,
)

__all__ = [
    "__version__",
    "COMMUTATION_RTOL",
    "SYMMETRY_RTOL",
    "ThetaTuple",
    "check_commuting",
    "commutation_defect",
    "mat_exp_sym",
    "min_eigenvalue",
    "spectral_norm",
    "star_apply",
    "star_index",
    "Ar1System",
    "ar1_drift",
    "ar1_residual",
    "drift_field",
    "edge_decay_norms",
    "noise_from_stationary",
    "stationary_solution",
    "verify_ar1",
    "CommutationError",
    "ConfigError",
    "DimensionMismatchError",
    "FieldCorrespondError",
    "NumericRangeError",
    "VerificationError",
    "WindowError",
    "CLOCKS",
    "FieldWindow",
    "Window",
    "load_field",
    "previous_value",
    "read_csv",
    "rect_from_units",
    "rect_increment",
    "save_field",
    "unit_increment",
    "unit_increment_field",
    "write_csv",
    "FouConfig",
    "derive_theta",
    "fou_batch",
    "fou_field",
    "fou_first_kind",
    "fou_noise",
    "fou_second_kind",
    "mixing_commutes",
    "EXP_CLOCK_LIMIT",
    "GRID_CAP",
    "HurstSpec",
    "SampleBatch",
    "SheetSampler",
    "build_cov_matrix",
    "factor_covariance",
    "fbs_cov",
    "load_batch",
    "sample_multivariate_sheet",
    "sample_sheet_batch",
    "sheet_points",
    "substream",
    "ComparisonRow",
    "EnsembleReport",
    "MomentSummary",
    "bonferroni_threshold",
    "empirical_moments",
    "fidelity_check",
    "increment_stationarity_check",
    "jackknife_se_mean",
    "self_similarity_check",
    "stationarity_check",
    "TruncationPolicy",
    "lamperti",
    "lamperti_inv",
    "m_forward",
    "m_inverse_truncated",
    "tail_bound_value",
    "truncation_depth",
]
