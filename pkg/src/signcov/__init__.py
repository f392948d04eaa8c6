"""Spatial sign covariance matrices with estimated location.

Estimators (fixed-location, plug-in, trace-1 and symmetrized SSCM), the
spatial median, elliptical model samplers with population oracles,
limit-covariance machinery for the plug-in estimator, and a deterministic
parallel Monte Carlo harness with a CLI front end.
"""

__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticsBundle,
    compute_bundle,
    element_variance,
    fixed_location_cov,
    joint_mean_cov,
    location_sensitivity,
    sandwich_cov,
    vec_sign_outers,
)
from .errors import (
    DegenerateSampleError,
    InvalidInputError,
    UnsupportedCombinationError,
)
from .linalg import (
    frobenius_sq_distance,
    kron,
    row_norms,
    sign_outer,
    spatial_sign,
    spatial_signs,
    symmetrize,
    vec,
)
from .location import (
    LocationResult,
    MedianOptions,
    l1_objective,
    sample_mean,
    spatial_median,
)
from .models import (
    EllipticalModel,
    InverseMomentResult,
    SeededStream,
    gaussian_model,
    inverse_moment,
    population_sscm_closed_p2,
    population_sscm_mc,
    sample,
    singularity_model,
    student_t_model,
)
from .scatter import (
    CoincidenceReport,
    ScatterMatrix,
    coincidence_report,
    frobenius_error_gram,
    sscm_fixed,
    sscm_plugin,
    sscm_star,
    ssscm,
)
from .simharness import (
    CellResult,
    ExperimentConfig,
    ExperimentResult,
    QQCellResult,
    ks_statistic,
    run_experiment,
    run_gamma_sweep,
    run_qq_experiment,
    run_table_experiment,
    write_metadata_json,
    write_result_csv,
)

__all__ = [
    "AsymptoticsBundle",
    "CellResult",
    "CoincidenceReport",
    "DegenerateSampleError",
    "EllipticalModel",
    "ExperimentConfig",
    "ExperimentResult",
    "InvalidInputError",
    "InverseMomentResult",
    "LocationResult",
    "MedianOptions",
    "QQCellResult",
    "ScatterMatrix",
    "SeededStream",
    "UnsupportedCombinationError",
    "compute_bundle",
    "coincidence_report",
    "element_variance",
    "fixed_location_cov",
    "frobenius_error_gram",
    "frobenius_sq_distance",
    "gaussian_model",
    "inverse_moment",
    "joint_mean_cov",
    "kron",
    "ks_statistic",
    "l1_objective",
    "location_sensitivity",
    "population_sscm_closed_p2",
    "population_sscm_mc",
    "row_norms",
    "run_experiment",
    "run_gamma_sweep",
    "run_qq_experiment",
    "run_table_experiment",
    "sample",
    "sample_mean",
    "sandwich_cov",
    "sign_outer",
    "singularity_model",
    "spatial_median",
    "spatial_sign",
    "spatial_signs",
    "sscm_fixed",
    "sscm_plugin",
    "sscm_star",
    "ssscm",
    "student_t_model",
    "symmetrize",
    "vec",
    "vec_sign_outers",
    "write_metadata_json",
    "write_result_csv",
]
