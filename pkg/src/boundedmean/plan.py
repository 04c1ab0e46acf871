"""Multistage sampling plans for estimating a bounded mean to a prescribed precision.

A plan observes cumulative samples at predeclared sizes ``n_1 < n_2 < ...``.
At stage ``l`` it computes the sample mean and the closed-form interval at
confidence ``1 - delta_l`` and stops as soon as the precision predicate of
its goal holds on that interval:

* absolute  ``U - eps < mean < L + eps``
* relative  ``(1 - sgn(mean) eps) U < mean < (1 + sgn(mean) eps) L``
* mixed     ``U - max(eps_a, sgn(mean) eps_r U) < mean < L + max(eps_a, sgn(mean) eps_r L)``

Per-stage error budgets come from a confidence schedule.  A finite schedule
spends ``zeta * delta`` at each of ``s`` stages (needs ``s zeta < 1``); a
tailed schedule spends ``zeta * delta`` up to stage ``tau`` and
``zeta * delta * 2**(tau - l)`` afterwards (needs ``(tau + 1) zeta < 1``).
Either way the union bound keeps the total failure probability under
``delta``, provided the plan stops with probability one.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from itertools import islice
from typing import Iterable, Optional, Union

import numpy as np

from .errors import DataError, DomainError, StreamExhausted
from .interval import (
    IntervalEstimate,
    Support,
    _check_delta,
    _unit_limits,
    massart_c,
    max_halfwidth,
    unit_summary,
)

__all__ = [
    "DEFAULT_MAX_STAGES",
    "AbsoluteGoal",
    "RelativeGoal",
    "MixedGoal",
    "FiniteSchedule",
    "TailedSchedule",
    "MultistagePlan",
    "StageRecord",
    "ExecutionTrace",
    "Outcome",
    "ValidationReport",
    "PlanValidationError",
    "default_zeta",
    "stage_delta",
    "check_stop",
    "stop_mask",
    "min_final_sample_size",
    "build_schedule",
    "validate_plan",
    "execute_plan",
]

# Hard stop for tailed schedules that declare no cap of their own.
DEFAULT_MAX_STAGES = 60


# -- goals -------------------------------------------------------------------


def _positive(name, value):
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class AbsoluteGoal:
    eps: float

    kind = "absolute"

    def __post_init__(self):
        object.__setattr__(self, "eps", _positive("eps", self.eps))

    def achieved(self, estimate, theta):
        return np.abs(estimate - theta) < self.eps


@dataclass(frozen=True)
class RelativeGoal:
    eps: float

    kind = "relative"

    def __post_init__(self):
        eps = _positive("eps", self.eps)
        if eps >= 1:
            raise DomainError(f"relative eps must be < 1, got {eps!r}")
        object.__setattr__(self, "eps", eps)

    def achieved(self, estimate, theta):
        return np.abs(estimate - theta) < self.eps * np.abs(theta)


@dataclass(frozen=True)
class MixedGoal:
    eps_a: float
    eps_r: float

    kind = "mixed"

    def __post_init__(self):
        object.__setattr__(self, "eps_a", _positive("eps_a", self.eps_a))
        object.__setattr__(self, "eps_r", _positive("eps_r", self.eps_r))

    def achieved(self, estimate, theta):
        err = np.abs(estimate - theta)
        return (err < self.eps_a) | (err < self.eps_r * np.abs(theta))


PrecisionGoal = Union[AbsoluteGoal, RelativeGoal, MixedGoal]


# -- confidence schedules ------------------------------------------------------


@dataclass(frozen=True)
class FiniteSchedule:
    """``s`` stages, each at confidence ``1 - zeta * delta``."""

    s: int
    zeta: float

    kind = "finite"

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise DomainError(f"stage count s must be a positive integer, got {self.s!r}")
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "zeta", _positive("zeta", self.zeta))

    @property
    def stage_cap(self) -> int:
        return self.s


@dataclass(frozen=True)
class TailedSchedule:
    """Unbounded schedule whose budget halves at each stage beyond ``tau``.

    ``max_stages`` caps execution; ``None`` means the library default
    :data:`DEFAULT_MAX_STAGES`.
    """

    tau: int
    zeta: float
    max_stages: Optional[int] = None

    kind = "tailed"

    def __post_init__(self):
        if int(self.tau) != self.tau or self.tau < 1:
            raise DomainError(f"tau must be a positive integer, got {self.tau!r}")
        object.__setattr__(self, "tau", int(self.tau))
        object.__setattr__(self, "zeta", _positive("zeta", self.zeta))
        if self.max_stages is not None:
            if int(self.max_stages) != self.max_stages or self.max_stages < 1:
                raise DomainError(f"max_stages must be a positive integer, got {self.max_stages!r}")
            object.__setattr__(self, "max_stages", int(self.max_stages))

    @property
    def stage_cap(self) -> int:
        return DEFAULT_MAX_STAGES if self.max_stages is None else self.max_stages


ConfidenceSchedule = Union[FiniteSchedule, TailedSchedule]


def default_zeta(schedule_kind: str, count: int) -> float:
    """Budget multiplier leaving a factor-of-two margin on the side condition.

    ``count`` is ``s`` for finite schedules and ``tau`` for tailed ones.
    """
    if schedule_kind == "finite":
        return 1.0 / (2 * count)
    if schedule_kind == "tailed":
        return 1.0 / (2 * (count + 1))
    raise DomainError(f"unknown schedule kind {schedule_kind!r}")


def stage_delta(schedule: ConfidenceSchedule, delta: float, stage: int) -> float:
    """Error probability allotted to the interval at ``stage`` (1-based)."""
    if int(stage) != stage or stage < 1:
        raise DomainError(f"stage must be a positive integer, got {stage!r}")
    base = schedule.zeta * delta
    if isinstance(schedule, FiniteSchedule):
        if stage > schedule.s:
            raise DomainError(f"stage {stage} exceeds the {schedule.s} stages of a finite schedule")
        return base
    if stage <= schedule.tau:
        return base
    return base * 2.0 ** (schedule.tau - stage)


# -- stopping rule -------------------------------------------------------------


def stop_mask(goal: PrecisionGoal, estimate, lower, upper):
    """Vectorized stopping predicate; all comparisons are strict."""
    if isinstance(goal, AbsoluteGoal):
        return (upper - goal.eps < estimate) & (estimate < lower + goal.eps)
    sgn = np.sign(estimate)
    if isinstance(goal, RelativeGoal):
        return ((1.0 - sgn * goal.eps) * upper < estimate) & (estimate < (1.0 + sgn * goal.eps) * lower)
    if isinstance(goal, MixedGoal):
        up_margin = np.maximum(goal.eps_a, sgn * goal.eps_r * upper)
        lo_margin = np.maximum(goal.eps_a, sgn * goal.eps_r * lower)
        return (upper - up_margin < estimate) & (estimate < lower + lo_margin)
    raise TypeError(f"unsupported goal {goal!r}")


def check_stop(goal: PrecisionGoal, estimate: float, interval) -> bool:
    """Whether sampling stops given the stage estimate and its raw interval.

    ``interval`` is an :class:`IntervalEstimate` or a ``(lower, upper)`` pair.
    """
    if isinstance(interval, IntervalEstimate):
        lower, upper = interval.lower, interval.upper
    else:
        lower, upper = interval
    return bool(stop_mask(goal, estimate, lower, upper))


# -- sample sizes ----------------------------------------------------------------


def _ceil(x: float) -> int:
    # 100 * 1.1**2 evaluates to 121.00000000000003; do not let that become 122.
    return math.ceil(round(x, 9))


def build_schedule(n1: int, growth: float, stages: int) -> tuple[int, ...]:
    """Geometric sizes ``ceil(n1 * growth**(l - 1))``, bumped by one on ties."""
    if int(n1) != n1 or n1 < 1:
        raise DomainError(f"n1 must be a positive integer, got {n1!r}")
    if not growth > 1:
        raise DomainError(f"growth must exceed 1, got {growth!r}")
    sizes = []
    for ell in range(stages):
        n = _ceil(n1 * growth**ell)
        if sizes and n <= sizes[-1]:
            n = sizes[-1] + 1
        sizes.append(n)
    return tuple(sizes)


def sizing_threshold(eps: float, zeta: float, delta: float, support: Support = Support()) -> float:
    """``(b - a)^2 / (2 eps^2) * ln(2 / (zeta delta))``."""
    return support.width**2 / (2.0 * eps**2) * math.log(2.0 / (zeta * delta))


def min_final_sample_size(eps: float, zeta: float, delta: float, support: Support = Support()) -> int:
    """Smallest final-stage size that forces the last stage to stop.

    Starts from the least integer strictly above :func:`sizing_threshold` and
    confirms that the interval at confidence ``1 - zeta delta`` is narrower
    than ``eps`` for every possible mean.  Should that check fail the size is
    increased until it holds and a :class:`RuntimeWarning` names the
    adjustment.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    _positive("zeta", zeta)
    stage_d = _check_delta(zeta * delta)
    threshold = sizing_threshold(eps, zeta, delta, support)
    n0 = n = math.floor(threshold) + 1
    while max_halfwidth(n, stage_d) * support.width >= eps:
        n += 1
    if n != n0:
        warnings.warn(
            f"final stage size raised from {n0} to {n} to keep the half-width below {eps!r}",
            RuntimeWarning,
            stacklevel=2,
        )
    return n


# -- plans -----------------------------------------------------------------------


@dataclass(frozen=True)
class MultistagePlan:
    """A complete sampling plan.

    ``sample_sizes`` lists every stage for a finite schedule.  For a tailed
    schedule it is a prefix, extended on demand by multiplying the last size
    by ``growth`` (inferred from the last two sizes when not given).
    """

    sample_sizes: tuple[int, ...]
    schedule: ConfidenceSchedule
    goal: PrecisionGoal
    delta: float
    support: Support = field(default_factory=Support)
    growth: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "delta", _check_delta(self.delta))
        if not self.sample_sizes:
            raise DomainError("a plan needs at least one sample size")

    @property
    def stage_cap(self) -> int:
        return self.schedule.stage_cap

    def _growth(self) -> float:
        if self.growth is not None:
            return float(self.growth)
        if len(self.sample_sizes) >= 2:
            return self.sample_sizes[-1] / self.sample_sizes[-2]
        return 2.0

    def stage_size(self, stage: int) -> int:
        """Cumulative sample count at ``stage`` (1-based)."""
        if stage <= len(self.sample_sizes):
            return self.sample_sizes[stage - 1]
        if isinstance(self.schedule, FiniteSchedule):
            raise DomainError(f"stage {stage} exceeds the {self.schedule.s} stages of a finite schedule")
        g = self._growth()
        n = self.sample_sizes[-1]
        for _ in range(stage - len(self.sample_sizes)):
            n = max(_ceil(n * g), n + 1)
        return n

    def stage_delta(self, stage: int) -> float:
        return stage_delta(self.schedule, self.delta, stage)

    def to_dict(self) -> dict:
        goal = {"type": self.goal.kind}
        if isinstance(self.goal, MixedGoal):
            goal.update(eps_a=self.goal.eps_a, eps_r=self.goal.eps_r)
        else:
            goal["eps"] = self.goal.eps
        if isinstance(self.schedule, FiniteSchedule):
            sched = {"type": "finite", "s": self.schedule.s, "zeta": self.schedule.zeta}
        else:
            sched = {"type": "tailed", "tau": self.schedule.tau, "zeta": self.schedule.zeta}
            if self.schedule.max_stages is not None:
                sched["max_stages"] = self.schedule.max_stages
        doc = {
            "support": {"a": self.support.a, "b": self.support.b},
            "delta": self.delta,
            "goal": goal,
            "schedule": sched,
            "sample_sizes": list(self.sample_sizes),
        }
        if self.growth is not None:
            doc["growth"] = self.growth
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "MultistagePlan":
        try:
            g = doc["goal"]
            kind = g["type"]
            if kind == "absolute":
                goal = AbsoluteGoal(g["eps"])
            elif kind == "relative":
                goal = RelativeGoal(g["eps"])
            elif kind == "mixed":
                goal = MixedGoal(g["eps_a"], g["eps_r"])
            else:
                raise DomainError(f"unknown goal type {kind!r}")
            s = doc["schedule"]
            if s["type"] == "finite":
                schedule = FiniteSchedule(s["s"], s["zeta"])
            elif s["type"] == "tailed":
                schedule = TailedSchedule(s["tau"], s["zeta"], s.get("max_stages"))
            else:
                raise DomainError(f"unknown schedule type {s['type']!r}")
            support = Support(doc["support"]["a"], doc["support"]["b"])
            return cls(
                sample_sizes=tuple(doc["sample_sizes"]),
                schedule=schedule,
                goal=goal,
                delta=doc["delta"],
                support=support,
                growth=doc.get("growth"),
            )
        except KeyError as exc:
            raise DomainError(f"plan document is missing field {exc.args[0]!r}") from None


# -- validation -----------------------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class PlanValidationError(DomainError):
    def __init__(self, report: ValidationReport):
        super().__init__("invalid plan: " + "; ".join(report.violations))
        self.report = report


def _certainty_eps(goal):
    if isinstance(goal, AbsoluteGoal):
        return goal.eps
    if isinstance(goal, MixedGoal):
        return goal.eps_a
    return None


def validate_plan(plan: MultistagePlan) -> ValidationReport:
    """Check a plan against the conditions its guarantee rests on.

    Problems with the plan's content are collected, never raised.
    """
    report = ValidationReport()
    sched = plan.schedule
    sizes = plan.sample_sizes

    if isinstance(sched, FiniteSchedule):
        budget = sched.s * sched.zeta
        if not budget < 1:
            report.violations.append(f"sζ = {budget:g} ≥ 1; the schedule needs sζ < 1")
        if len(sizes) != sched.s:
            report.violations.append(f"finite schedule has s = {sched.s} stages but {len(sizes)} sample sizes")
    else:
        budget = (sched.tau + 1) * sched.zeta
        if not budget < 1:
            report.violations.append(f"(τ+1)ζ = {budget:g} ≥ 1; the schedule needs (τ+1)ζ < 1")
        if sched.max_stages is not None and sched.max_stages < sched.tau + 1:
            report.violations.append(f"max_stages = {sched.max_stages} must be at least τ+1 = {sched.tau + 1}")
        if plan.growth is not None and not plan.growth > 1:
            report.violations.append(f"growth = {plan.growth:g} must exceed 1")

    if sizes[0] < 1:
        report.violations.append(f"sample sizes must be positive, got n_1 = {sizes[0]}")
    for ell in range(1, len(sizes)):
        if sizes[ell] <= sizes[ell - 1]:
            report.violations.append(
                f"sample sizes must be strictly increasing: n_{ell} = {sizes[ell - 1]} ≥ n_{ell + 1} = {sizes[ell]}"
            )

    if isinstance(plan.goal, RelativeGoal):
        report.warnings.append(
            "relative precision cannot stop while the estimate is 0; termination is not guaranteed when θ = 0"
        )
        if isinstance(sched, TailedSchedule) and sched.max_stages is None:
            report.violations.append("relative goals with a tailed schedule require an explicit max_stages cap")

    eps = _certainty_eps(plan.goal)
    if isinstance(sched, FiniteSchedule) and eps is not None and len(sizes) == sched.s:
        stage_d = sched.zeta * plan.delta
        try:
            needed = min_final_sample_size(eps, sched.zeta, plan.delta, plan.support)
        except DomainError as exc:
            report.violations.append(f"cannot size the final stage: {exc}")
        else:
            if sizes[-1] < needed:
                report.violations.append(
                    f"final stage size n_s = {sizes[-1]} does not force a stop; "
                    f"need n_s ≥ {needed} for eps = {eps:g} at per-stage delta {stage_d:g}"
                )
    return report


# -- execution ------------------------------------------------------------------------


class Outcome(str, enum.Enum):
    TERMINATED = "terminated"
    STAGE_CAP_REACHED = "stage_cap_reached"


@dataclass(frozen=True)
class StageRecord:
    stage: int
    n: int
    mean: float
    delta: float
    interval: IntervalEstimate
    stopped: bool


@dataclass(frozen=True)
class ExecutionTrace:
    records: tuple[StageRecord, ...]
    outcome: Outcome

    @property
    def terminal_stage(self) -> Optional[int]:
        return self.records[-1].stage if self.outcome is Outcome.TERMINATED else None

    @property
    def estimate(self) -> Optional[float]:
        return self.records[-1].mean if self.outcome is Outcome.TERMINATED else None

    @property
    def samples_used(self) -> int:
        return self.records[-1].n if self.records else 0

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "terminal_stage": self.terminal_stage,
            "estimate": self.estimate,
            "samples_used": self.samples_used,
            "records": [
                {
                    "stage": r.stage,
                    "n": r.n,
                    "mean": r.mean,
                    "delta": r.delta,
                    "lower": r.interval.lower,
                    "upper": r.interval.upper,
                    "stopped": r.stopped,
                }
                for r in self.records
            ],
        }


def _take(source, k):
    take = getattr(source, "take", None)
    if take is not None:
        return np.asarray(take(k), dtype=float)
    return np.fromiter(islice(source, k), dtype=float)


def stage_limits(n, mean, delta, support):
    """Raw original-scale limits for original-scale means (arrays allowed)."""
    z = support.scale(mean)
    z = np.clip(z, 0.0, 1.0)
    lo, hi = _unit_limits(n, z, massart_c(delta))
    return support.unscale(lo), support.unscale(hi)


def execute_plan(plan: MultistagePlan, source: Iterable[float]) -> ExecutionTrace:
    """Run ``plan`` on a sequential sample source.

    Samples are cumulative: stage ``l`` uses the first ``n_l`` values of
    ``source``.  The stopping rule is evaluated on the raw (unclamped) limits.

    Raises
    ------
    PlanValidationError
        If :func:`validate_plan` reports violations.
    StreamExhausted
        If ``source`` ends before a stage is complete.
    DataError
        If a sample falls outside the plan's support.
    """
    report = validate_plan(plan)
    if not report.ok:
        raise PlanValidationError(report)
    support = plan.support
    if not hasattr(source, "take"):
        source = iter(source)

    records = []
    total = 0.0
    n_prev = 0
    for ell in range(1, plan.stage_cap + 1):
        n = plan.stage_size(ell)
        new = _take(source, n - n_prev)
        if new.size < n - n_prev:
            raise StreamExhausted(
                f"stage {ell} needs {n} samples but the source ended after {n_prev + new.size}",
                stage=ell,
                needed=n,
                available=n_prev + new.size,
            )
        bad = np.flatnonzero(~((new >= support.a) & (new <= support.b)))
        if bad.size:
            i = n_prev + int(bad[0])
            raise DataError(
                f"sample {i} = {new[bad[0]]!r} lies outside the support [{support.a!r}, {support.b!r}]",
                index=i,
            )
        total = float(np.cumsum(np.concatenate(([total], new)))[-1])
        mean = total / n
        d = plan.stage_delta(ell)
        unit_summary(n, mean, support)  # range check on the running mean
        lower, upper = stage_limits(n, mean, d, support)
        interval = IntervalEstimate(float(lower), float(upper), clamped=False)
        stopped = check_stop(plan.goal, mean, interval)
        records.append(StageRecord(ell, n, mean, d, interval, stopped))
        n_prev = n
        if stopped:
            return ExecutionTrace(tuple(records), Outcome.TERMINATED)
    return ExecutionTrace(tuple(records), Outcome.STAGE_CAP_REACHED)
