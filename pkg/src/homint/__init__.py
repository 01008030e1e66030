"""Homogenized limits of 1D diffusions with periodic drift and an interface."""

from .drift import (
    DriftSpec,
    PeriodicDrift,
    PotentialEvaluator,
    eval_drift,
    eval_potential,
    integrating_factor,
    load_drift_config,
    parse_drift_spec,
)
from .homogenize import (
    Compensator,
    Corrector,
    HomogenizedParams,
    effective_coefficient_cell,
    effective_coefficient_product,
    homogenized_params,
    interface_weights,
    solve_corrector,
)
from .skew import (
    SkewParams,
    check_domain_condition,
    density_gate,
    g_inverse,
    g_map,
    limit_marginal_cdf,
    sample_limit_path,
    sample_skew_increment,
    skew_transition_cdf,
    skew_transition_density,
)
from .micro import (
    PathEnsemble,
    SimConfig,
    averaging_residual,
    compensated,
    default_config,
    empirical_density,
    harmonic_coordinate,
    plateau_ratio,
    sign_fraction,
    simulate_micro,
)
from .analytic import (
    ExitProbabilityTable,
    ResolventSolution,
    ScaleFunction,
    exit_probability,
    exit_rate_fit,
    resolvent_mc_crosscheck,
    resolvent_solve,
    scale,
)
from .harness import (
    ConvergenceReport,
    ExperimentConfig,
    fit_rate,
    ks_distance,
    run_convergence_study,
)

__version__ = "0.1.0"
