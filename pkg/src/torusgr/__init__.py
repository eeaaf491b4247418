"""Pseudo-spectral evolution of a self-gravitating scalar field on the
3-torus with positive cosmological constant, in orthonormal-frame variables
with a parabolic lapse.

The public surface re-exports the pieces most scripts need: background
solutions, grids, initial-data recipes, the evolution driver, diagnostics,
and the run harness.  See the README for the configuration file format and
the CLI.
"""

from .background import (
    ALPHA_CONVENTIONS,
    CONSTRAINT_CONSISTENT,
    UNHALVED_KINETIC,
    BackgroundState,
    FlrwLimits,
    FlrwParams,
    flrw_asymptotic_check,
    flrw_background,
    flrw_limits,
)
from .config import AcceptanceToggles, RunConfig, default_snapshot_times, load_config
from .constraints import ConstraintResiduals, evaluate_constraints
from .diagnostics import (
    AsymptoticData,
    DiagnosticsRecord,
    Trajectory,
    causal_character,
    energy_density,
    extract_asymptotics,
    fit_decay_rate,
    read_diagnostics_csv,
    reconstruct_metric,
    total_energy,
)
from .errors import (
    ConfigError,
    InsufficientSamplesError,
    LapseNonPositiveError,
    NoConvergenceError,
    NonFiniteFieldError,
    NonPositivePhiError,
    NonPositiveValueError,
    RecipeError,
    SingularFrameError,
    StabilityViolationError,
    TorusGrError,
    WindowTooEarlyError,
)
from .evolution import EvolutionConfig, evolve, step, timestep
from .grid import Grid
from .harness import ConvergenceReport, RunResult, convergence_study, run
from .initial_data import (
    CONFORMAL_PERTURBATION,
    EXACT_FLRW,
    HOMOGENEOUS_ANISOTROPIC,
    DataRecipe,
    LichnerowiczSolution,
    ModeSpec,
    build_initial_state,
    lichnerowicz_solve,
    perturbation_field,
)
from .state import FullVars, State, hat, state_norms, unhat, zero_state

__version__ = "0.1.0"

__all__ = [
    "ALPHA_CONVENTIONS",
    "AcceptanceToggles",
    "AsymptoticData",
    "BackgroundState",
    "CONFORMAL_PERTURBATION",
    "CONSTRAINT_CONSISTENT",
    "ConfigError",
    "ConstraintResiduals",
    "ConvergenceReport",
    "DataRecipe",
    "DiagnosticsRecord",
    "EXACT_FLRW",
    "EvolutionConfig",
    "FlrwLimits",
    "FlrwParams",
    "FullVars",
    "Grid",
    "HOMOGENEOUS_ANISOTROPIC",
    "InsufficientSamplesError",
    "LapseNonPositiveError",
    "LichnerowiczSolution",
    "ModeSpec",
    "NoConvergenceError",
    "NonFiniteFieldError",
    "NonPositivePhiError",
    "NonPositiveValueError",
    "UNHALVED_KINETIC",
    "RecipeError",
    "RunConfig",
    "RunResult",
    "SingularFrameError",
    "StabilityViolationError",
    "State",
    "TorusGrError",
    "Trajectory",
    "WindowTooEarlyError",
    "build_initial_state",
    "causal_character",
    "convergence_study",
    "default_snapshot_times",
    "energy_density",
    "evaluate_constraints",
    "evolve",
    "extract_asymptotics",
    "fit_decay_rate",
    "flrw_asymptotic_check",
    "flrw_background",
    "flrw_limits",
    "hat",
    "lichnerowicz_solve",
    "load_config",
    "perturbation_field",
    "read_diagnostics_csv",
    "reconstruct_metric",
    "run",
    "state_norms",
    "step",
    "timestep",
    "total_energy",
    "unhat",
    "zero_state",
]
