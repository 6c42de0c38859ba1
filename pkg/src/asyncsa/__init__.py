"""Asynchronous stochastic approximation with delays, errors, and noise.

The package simulates coordinate-wise stochastic approximation where each
agent wakes on its own schedule, reads possibly stale views of the other
agents, and updates with a step size driven by its own activation count.
On top of the engine sit a radial pull-back variant, value-iteration and
gradient-descent drives, diagnostic checks, and a delayed error-scaling
study.
"""

from .config import (
    BellmanObjective,
    GradientObjective,
    ProjectionSpec,
    QuadraticObjective,
    RunConfig,
    ScaledIdentityObjective,
    SweepSpec,
    load_config_file,
    parse_run_config,
    parse_sweep_config,
    run_config_to_dict,
    set_by_path,
)
from .core import (
    IterateHistory,
    ProjectionRegion,
    RunResult,
    SimState,
    StochasticModels,
    apply_tick,
    build_runtime,
    delayed_view,
    draw_tick,
    projective_step,
    run,
    run_light,
    sa_step,
    sa_step_into,
)
from .diagnostics import (
    CheckItem,
    CheckReport,
    a2pg_stationarity_report,
    a2vi_residual_report,
    activation_rates,
    check_activation,
    check_step_size,
    contraction_estimate,
    gradient_fidelity,
    oscillation,
)
from .errors import (
    ConfigError,
    DivergenceError,
    FixedPointError,
    HistoryWindowError,
    InsufficientActivationError,
)
from .experiment import (
    EPS_GRID,
    AggregateResult,
    emit_plot_data,
    read_aggregate_csv,
    read_plot_data,
    reproduce_experiment,
    sample_instance,
    summarize,
    sweep_run,
    write_aggregate_csv,
    write_sweep_csv,
)
from .fields import (
    GradientDescentField,
    QuadraticBowl,
    QuadraticField,
    Rosenbrock,
    ScaledIdentityField,
    gradient_field,
    random_pd_matrix,
)
from .mdp import (
    BellmanResidualField,
    FiniteMDP,
    bellman_apply,
    bellman_residual_field,
    exact_fixed_point,
    greedy_policy,
    load_fixture,
    load_values,
    policy_value,
    random_mdp,
    save_fixture,
    save_values,
)
from .norms import EuclideanNorm, WeightedMaxNorm, WeightedPNorm, weighted_norm
from .schedules import (
    AgentSchedule,
    AllActive,
    BernoulliActivation,
    ConstantSteps,
    HarmonicSteps,
    PowerSteps,
    RoundRobin,
    balance_ratio,
    effective_step,
    timeline,
)
from .stability import (
    PairedRun,
    gap_report,
    non_expansiveness_check,
    run_paired,
    write_gap_csv,
)
from .stochastics import (
    ComponentUniformErrors,
    FixedBiasErrors,
    GeometricDelays,
    NormBallErrors,
    RademacherNoise,
    StaleRefreshDelays,
    UniformDelays,
    UniformNoise,
    ZeroDelays,
    ZeroErrors,
    ZeroNoise,
)
from .trace import RunTrace, read_trace_csv, read_trace_jsonl

__version__ = "0.1.0"

__all__ = [
    "AggregateResult",
    "AgentSchedule",
    "AllActive",
    "BellmanObjective",
    "BellmanResidualField",
    "BernoulliActivation",
    "CheckItem",
    "CheckReport",
    "ComponentUniformErrors",
    "ConfigError",
    "ConstantSteps",
    "DivergenceError",
    "EPS_GRID",
    "EuclideanNorm",
    "FiniteMDP",
    "FixedBiasErrors",
    "FixedPointError",
    "GeometricDelays",
    "GradientDescentField",
    "GradientObjective",
    "HarmonicSteps",
    "HistoryWindowError",
    "InsufficientActivationError",
    "IterateHistory",
    "NormBallErrors",
    "PairedRun",
    "PowerSteps",
    "ProjectionRegion",
    "ProjectionSpec",
    "QuadraticBowl",
    "QuadraticField",
    "QuadraticObjective",
    "RademacherNoise",
    "Rosenbrock",
    "RoundRobin",
    "RunConfig",
    "RunResult",
    "RunTrace",
    "ScaledIdentityField",
    "ScaledIdentityObjective",
    "SimState",
    "StaleRefreshDelays",
    "StochasticModels",
    "SweepSpec",
    "UniformDelays",
    "UniformNoise",
    "WeightedMaxNorm",
    "WeightedPNorm",
    "ZeroDelays",
    "ZeroErrors",
    "ZeroNoise",
    "a2pg_stationarity_report",
    "a2vi_residual_report",
    "activation_rates",
    "apply_tick",
    "balance_ratio",
    "bellman_apply",
    "bellman_residual_field",
    "build_runtime",
    "check_activation",
    "check_step_size",
    "contraction_estimate",
    "delayed_view",
    "draw_tick",
    "effective_step",
    "emit_plot_data",
    "exact_fixed_point",
    "gap_report",
    "gradient_fidelity",
    "gradient_field",
    "greedy_policy",
    "load_config_file",
    "load_fixture",
    "load_values",
    "non_expansiveness_check",
    "oscillation",
    "parse_run_config",
    "parse_sweep_config",
    "policy_value",
    "projective_step",
    "random_mdp",
    "random_pd_matrix",
    "read_aggregate_csv",
    "read_plot_data",
    "read_trace_csv",
    "read_trace_jsonl",
    "reproduce_experiment",
    "run",
    "run_config_to_dict",
    "run_light",
    "run_paired",
    "sa_step",
    "sa_step_into",
    "sample_instance",
    "save_fixture",
    "save_values",
    "set_by_path",
    "summarize",
    "sweep_run",
    "timeline",
    "weighted_norm",
    "write_aggregate_csv",
    "write_gap_csv",
    "write_sweep_csv",
]
