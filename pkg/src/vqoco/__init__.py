"""Online convex optimization with long-term, time-varying constraints.

Virtual-queue learners with time-varying schedules, a constant-parameter
variant for strictly feasible instances, a doubling-trick wrapper for unknown
horizons, a generic saddle-point baseline, seeded benchmark environments,
metrics, and a CLI experiment harness.
"""

from ._kernels import NUMBA_ENABLED
from .config import AlgorithmSpec, ConfigParseError, ExperimentConfig, parse_config
from .driver import doubling_run, rollout
from .environments import (
    JobSchedConfig,
    NetworkConfig,
    OrrConfig,
    build_incidence,
    jobsched_instance,
    network_instance,
    orr_generate,
    orr_sup_deviation,
    slater_instance,
    snapshot_text,
)
from .learners import (
    DoublingLearner,
    SaddleLearner,
    SlaterLearner,
    StepRecord,
    VqbLearner,
    alpha_schedule,
    epoch_lengths,
    gamma_schedule,
    preset_params,
    saddle_step,
    slater_dual_update,
    slater_params,
    slater_queue_cap,
    slater_step,
    vqb_dual_update,
    vqb_init,
    vqb_step,
)
from .metrics import (
    MetricsReport,
    Trajectory,
    compute_metrics,
    dynamic_regret,
    function_variation,
    growth_exponent,
    path_length,
    queue_violation_bound,
    violations,
)
from .problem import (
    AssumptionConstants,
    Ball,
    Box,
    BoxWithLinearCap,
    ConfigurationError,
    ConstraintOracle,
    FeasibleSet,
    LossOracle,
    ProblemInstance,
    check_assumption_bounds,
    default_beta,
    diameter,
    project,
)
from .runner import compare_table, make_instance, make_learner, mix64, run_experiment, write_csv
from .subsolvers import (
    SolveResult,
    SolverConfig,
    SubproblemSpec,
    SubsolverError,
    estimate_sup_deviation,
    per_slot_minimizer,
    solve_primal_subproblem,
    subproblem_residual,
)

__version__ = "0.1.0"
