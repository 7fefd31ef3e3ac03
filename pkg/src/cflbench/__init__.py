"""Benchmark library for online optimization under a long-term demand constraint.

Public surface re-exported here: problem primitives (:mod:`cflbench.core`),
threshold machinery (:mod:`cflbench.thresholds`), the per-step solvers
(:mod:`cflbench.subproblem`), online algorithms (:mod:`cflbench.algorithms`),
offline baselines and advice (:mod:`cflbench.offline`), instance generators
(:mod:`cflbench.instances`), and the experiment harness
(:mod:`cflbench.harness`).
"""

from .core import (
    FEAS_TOL,
    CflError,
    ConfigError,
    CostBreakdown,
    DimensionMismatch,
    DomainError,
    InfeasibleError,
    Instance,
    NumericError,
    Trajectory,
    compulsory_start,
    constraint_value,
    evaluate_cost,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    make_trajectory,
    save_instance,
    trajectory_cost,
    trajectory_violations,
    validate_instance,
    weighted_l1,
)
from .thresholds import (
    ThresholdParams,
    compute_alpha,
    compute_alpha_bisection,
    compute_gamma,
    lambert_w0,
    make_threshold_params,
    phi,
    phi_eps,
    phi_eps_integral,
    phi_integral,
    z_pcm,
)

from .subproblem import (
    SLACK_TOL,
    ConsistencyContext,
    StepContext,
    consistency_slack,
    fill_to_utilization,
    grid_oracle,
    minimize_pseudo_cost,
    minimize_pseudo_cost_constrained,
    pseudo_cost_objective,
)
from .algorithms import (
    ADVICE_FREE_ALGORITHMS,
    Alg1State,
    BaselineConfig,
    ClipState,
    compulsory_controller,
    make_player,
    run_agnostic,
    run_alg1,
    run_baseline,
    run_clip,
    run_move_to_minimizer,
    run_simple_threshold,
)
from .offline import (
    AdviceConfig,
    OfflineSolution,
    make_advice,
    solve_opt,
    solve_worst,
)
from .instances import (
    AdversaryConfig,
    GeneratorConfig,
    MalInstance,
    drop_off_state,
    generate_synthetic,
    ingest_trace,
    make_inactive_advice,
    mal_to_cfl,
    restore_off_state,
    star_distance,
    y_adversary_run,
)
from .harness import (
    ADVICE_FREE_ROSTER,
    ADVISED_ROSTER,
    ExperimentRecord,
    SweepConfig,
    aggregate_records,
    cdf_points,
    cmd_adversary,
    cmd_run,
    cmd_sweep,
    mean,
    percentile,
    records_to_csv,
)

__all__ = [
    "SLACK_TOL",
    "ConsistencyContext",
    "StepContext",
    "consistency_slack",
    "grid_oracle",
    "fill_to_utilization",
    "minimize_pseudo_cost",
    "minimize_pseudo_cost_constrained",
    "pseudo_cost_objective",
    "ADVICE_FREE_ALGORITHMS",
    "Alg1State",
    "BaselineConfig",
    "ClipState",
    "compulsory_controller",
    "make_player",
    "run_agnostic",
    "run_alg1",
    "run_baseline",
    "run_clip",
    "run_move_to_minimizer",
    "run_simple_threshold",
    "AdviceConfig",
    "OfflineSolution",
    "make_advice",
    "solve_opt",
    "solve_worst",
    "AdversaryConfig",
    "GeneratorConfig",
    "MalInstance",
    "drop_off_state",
    "generate_synthetic",
    "ingest_trace",
    "make_inactive_advice",
    "mal_to_cfl",
    "restore_off_state",
    "star_distance",
    "y_adversary_run",
    "ADVICE_FREE_ROSTER",
    "ADVISED_ROSTER",
    "ExperimentRecord",
    "SweepConfig",
    "aggregate_records",
    "cdf_points",
    "cmd_adversary",
    "cmd_run",
    "cmd_sweep",
    "mean",
    "percentile",
    "records_to_csv",
    "FEAS_TOL",
    "CflError",
    "ConfigError",
    "CostBreakdown",
    "DimensionMismatch",
    "DomainError",
    "InfeasibleError",
    "Instance",
    "NumericError",
    "Trajectory",
    "compulsory_start",
    "constraint_value",
    "evaluate_cost",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "make_trajectory",
    "save_instance",
    "trajectory_cost",
    "trajectory_violations",
    "validate_instance",
    "weighted_l1",
    "ThresholdParams",
    "compute_alpha",
    "compute_alpha_bisection",
    "compute_gamma",
    "lambert_w0",
    "make_threshold_params",
    "phi",
    "phi_eps",
    "phi_eps_integral",
    "phi_integral",
    "z_pcm",
]

__version__ = "0.1.0"
