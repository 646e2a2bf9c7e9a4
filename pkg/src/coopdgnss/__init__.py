"""Cooperative differential GNSS positioning: observation modeling,
weighted least-squares and integer-ambiguity estimation, closed-form
estimation bounds, and a Monte Carlo experiment harness."""

from .errors import (
    ConfigError,
    CoopDgnssError,
    NumericalError,
    SingularGeometryError,
    SolvabilityError,
)
from .geometry import (
    SatelliteGeometry,
    VisibilitySplit,
    dd_geometry,
    gdop,
    generate_constellation,
    geometry_matrix,
    load_fixture,
    observation_matrix,
    save_fixture,
)
from .netmodel import (
    BetaSet,
    NetworkSpec,
    StructuredCovariance,
    alpha_cov,
    beta,
    closed_form_inverse,
    clustered_cov,
    clustered_obs,
    dd_covariance,
    dd_operator,
    per_receiver_cov,
    pivot_difference,
    sd_covariance,
    sd_operator,
)
from .simulator import (
    ObservationSet,
    TruthState,
    dump_observations,
    sample_truth,
    synthesize_raw,
    to_dd,
    to_sd,
)
from .estimators import (
    AmbiguityResolver,
    EstimateReport,
    LinearWlsSolver,
    ambiguity_cost,
    cdgnss_wls,
    crtk_fix,
    crtk_float,
    resolve_ambiguities,
    solvability_check,
)
from .bounds import (
    AsymptoticReport,
    BoundReport,
    asymptotic_suite,
    benchmarks,
    bound_report,
    cluster_fims,
    constrained_user_crb,
    crb_block,
    crtk_fix_crb,
    crtk_float_crb,
    crtk_float_fim,
    fim,
    parameterized_fim,
    rmse_bound,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "CoopDgnssError",
    "ConfigError",
    "SolvabilityError",
    "NumericalError",
    "SingularGeometryError",
    "SatelliteGeometry",
    "VisibilitySplit",
    "generate_constellation",
    "geometry_matrix",
    "observation_matrix",
    "gdop",
    "dd_geometry",
    "save_fixture",
    "load_fixture",
    "NetworkSpec",
    "BetaSet",
    "StructuredCovariance",
    "beta",
    "sd_operator",
    "pivot_difference",
    "dd_operator",
    "per_receiver_cov",
    "sd_covariance",
    "alpha_cov",
    "dd_covariance",
    "clustered_obs",
    "clustered_cov",
    "closed_form_inverse",
    "TruthState",
    "ObservationSet",
    "sample_truth",
    "synthesize_raw",
    "to_sd",
    "to_dd",
    "dump_observations",
    "EstimateReport",
    "LinearWlsSolver",
    "AmbiguityResolver",
    "solvability_check",
    "cdgnss_wls",
    "crtk_float",
    "crtk_fix",
    "resolve_ambiguities",
    "ambiguity_cost",
    "BoundReport",
    "AsymptoticReport",
    "fim",
    "crb_block",
    "rmse_bound",
    "crtk_float_fim",
    "crtk_float_crb",
    "crtk_fix_crb",
    "cluster_fims",
    "parameterized_fim",
    "constrained_user_crb",
    "benchmarks",
    "asymptotic_suite",
    "bound_report",
]
