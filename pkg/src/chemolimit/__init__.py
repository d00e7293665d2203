"""Numerical laboratory for indirect-signalling chemotaxis and its
parabolic-elliptic and direct-signalling limits."""

from .grids import Field, Grid, GridError, integrate, norm_lp, norm_sobolev
from .operators import (
    EllipticOperator,
    EllipticSolveError,
    chemotaxis_divergence,
    elliptic_solve,
    gradient,
    gradient_magnitude,
    heat_semigroup,
    laplacian,
    resolvent_via_semigroup,
)
from .dynamics import (
    Full,
    IdsLimit,
    ModelParams,
    PesLimit,
    SimulationError,
    State,
    Stepper,
    Trajectory,
    simulate,
    step_full,
    step_ids,
    step_pes,
)
from .diagnostics import (
    EnergyRecord,
    IdsManifold,
    InitialLayer,
    PesManifold,
    dissipation,
    initial_layer,
    lyapunov,
    manifold_distance,
    manifold_residuals,
    mass,
    transport_dissipation,
)
from .experiments import (
    EpsPrepared,
    IdsSweep,
    IllPrepared,
    PesSweep,
    RateFit,
    RateReport,
    SweepConfig,
    SweepError,
    WellPrepared,
    discretization_floor,
    emit_csv,
    fit_rate,
    parse_report_csv,
    run_ids_sweep,
    run_pes_sweep,
)

__version__ = "0.1.0"
