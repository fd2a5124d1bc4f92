"""ksradial: a numerical laboratory for radial chemotaxis aggregation.

Evolves the cumulative-mass form of the parabolic-elliptic Keller-Segel
system in dimensions d >= 3, measures concentration functionals, detects
blowup, and computes stationary and self-similar solutions via phase-plane
and shooting methods.
"""

__version__ = "0.1.0"

from .comparison import (
    Barrier,
    BarrierVerdict,
    ComparisonReport,
    barrier_check,
    barrier_value,
    comparison_check,
    decay_slope,
    half_line_heat,
)
from .core import (
    DensityProfile,
    GridTooLargeError,
    InvalidProfileError,
    MassProfile,
    ModelParams,
    RadialGrid,
    chandrasekhar_density,
    chandrasekhar_mass,
    density_from_mass,
    explicit_blowup_density,
    explicit_blowup_mass,
    gaussian_density,
    gaussian_mass,
    load_profile,
    lq_norm,
    mass_from_density,
    morrey_norm_offcenter,
    potential_gradient_radial,
    radial_concentration,
    save_profile,
    smoothed_chandrasekhar_mass,
    sphere_measure,
)
from .criteria import (
    CriteriaReport,
    bump_function,
    bump_moment,
    criteria_report,
    heat_at_origin,
    heat_tail_estimate,
)
from .pde import (
    BlowupDetected,
    BlowupTrigger,
    DiagnosticSeries,
    EvolutionResult,
    EvolutionState,
    ReachedHorizon,
    SolverConfig,
    StepFailure,
    StepRejectedError,
    blowup_monitor,
    evolve,
    spatial_operator,
    step,
)
from .phaseplane import (
    PhasePoint,
    PhaseTrajectory,
    QuadrantExitError,
    count_crossings,
    count_crossings_certified,
    integrate_separatrix,
    interior_fixed_point,
    linearization_eigenvalues,
    lyapunov,
    stationary_mass_profile,
    vector_field,
)
from .scenario import (
    RunManifest,
    Scenario,
    ScenarioError,
    load_grid,
    load_scenario,
    run,
    sweep,
)
from .selfsimilar import (
    ProfileSolution,
    ShotRejectedError,
    TailNotConvergedError,
    extract_epsilon,
    growth_bound,
    nonautonomous_field,
    profile_rhs,
    selfsimilar_to_mass,
    shoot_for_epsilon,
    shoot_profile,
)
