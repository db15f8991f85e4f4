"""freelab: numerics for one-dimensional free probability.

Free entropy and its relatives, equilibrium measures of confining
potentials, free pressure with Legendre duality, quadratic quantile
transport, a certification harness for transport-entropy and duality
inequalities, and random-matrix finite-size comparisons.
"""

__version__ = "0.1.0"

from .errors import (
    FreelabError,
    HypothesisError,
    InvalidInputError,
    MultiCutError,
    SingularEvaluationError,
    SolverError,
)
from .measures import (
    AtomicMeasure,
    GridMeasure,
    from_density_table,
    from_quantile_table,
    ks_distance,
    make_arcsine,
    make_marchenko_pastur_family,
    make_semicircular,
    moment,
    pushforward_monotone,
    translate,
)
from .potentials import (
    Potential,
    abs_potential,
    arcsine_indicator,
    fenchel_young_gap,
    legendre_transform,
    linear_halfline,
    moreau_yosida,
    polynomial_even,
    quadratic,
    quartic,
    shift_potential,
    table_potential,
    tilt_linear,
)
from .logpotential import (
    HALF_LOG_2PI,
    EnergyValue,
    chi,
    chi_plus,
    chi_rel,
    euler_lagrange_residual,
    hilbert_transform,
    integrate_potential,
    log_energy,
    log_jacobian,
    relative_entropy_semicircular,
    schwinger_dyson_residual,
)
from .equilibrium import (
    CenteringShift,
    EquilibriumResult,
    SolverSettings,
    entropy_duality_check,
    find_centering_shift,
    free_pressure,
    moment_map,
    solve_equilibrium,
)
from .transport import (
    TransportValue,
    max_correlation,
    ssfti_functional,
    translation_identity_check,
    w2,
    w2_atomic_oracle,
)
from .inequalities import KINDS, InequalityReport, verify
from .rmt import (
    ConvergenceSeries,
    EnsembleSample,
    empirical_vs_equilibrium,
    gue_entropy_identity,
    log_joint_density,
    matrix_fenchel_young_check,
    micro_pressure_estimate,
    rate_gap_per_sweep,
    sample_eigenvalues,
)

__all__ = [
    "AtomicMeasure",
    "CenteringShift",
    "ConvergenceSeries",
    "EnergyValue",
    "EnsembleSample",
    "EquilibriumResult",
    "FreelabError",
    "GridMeasure",
    "HALF_LOG_2PI",
    "HypothesisError",
    "InequalityReport",
    "InvalidInputError",
    "KINDS",
    "MultiCutError",
    "Potential",
    "SingularEvaluationError",
    "SolverError",
    "SolverSettings",
    "TransportValue",
    "__version__",
    "abs_potential",
    "arcsine_indicator",
    "chi",
    "chi_plus",
    "chi_rel",
    "empirical_vs_equilibrium",
    "entropy_duality_check",
    "euler_lagrange_residual",
    "fenchel_young_gap",
    "find_centering_shift",
    "free_pressure",
    "from_density_table",
    "from_quantile_table",
    "gue_entropy_identity",
    "hilbert_transform",
    "integrate_potential",
    "ks_distance",
    "legendre_transform",
    "linear_halfline",
    "log_energy",
    "log_jacobian",
    "log_joint_density",
    "make_arcsine",
    "make_marchenko_pastur_family",
    "make_semicircular",
    "matrix_fenchel_young_check",
    "max_correlation",
    "micro_pressure_estimate",
    "moment",
    "moment_map",
    "moreau_yosida",
    "polynomial_even",
    "pushforward_monotone",
    "quadratic",
    "quartic",
    "rate_gap_per_sweep",
    "relative_entropy_semicircular",
    "sample_eigenvalues",
    "schwinger_dyson_residual",
    "shift_potential",
    "solve_equilibrium",
    "ssfti_functional",
    "table_potential",
    "tilt_linear",
    "translate",
    "translation_identity_check",
    "verify",
    "w2",
    "w2_atomic_oracle",
]
