"""Variance-adaptive confidence intervals and multistage estimation for bounded means."""

from .errors import DataError, DomainError, StreamExhausted
from .interval import (
    ConfidenceParams,
    IntervalEstimate,
    Support,
    UnitSummary,
    bounded_interval,
    epsilon_root,
    eq1_residual,
    hoeffding_interval,
    massart_c,
    max_halfwidth,
    summarize,
    t_map,
    unit_interval,
    unit_summary,
)
from .plan import (
    AbsoluteGoal,
    ExecutionTrace,
    FiniteSchedule,
    MixedGoal,
    MultistagePlan,
    Outcome,
    RelativeGoal,
    StageRecord,
    TailedSchedule,
    build_schedule,
    check_stop,
    execute_plan,
    min_final_sample_size,
    stage_delta,
    validate_plan,
)
from .sim import DistributionSpec, coverage_experiment, make_stream, plan_experiment

__version__ = "0.1.0"
