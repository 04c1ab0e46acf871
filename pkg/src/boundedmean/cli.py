"""Command line front end.

Each invocation writes one JSON document to stdout and a short human
summary to stderr.  Exit codes::

    0   success
    2   bad data (malformed line, value outside the bounds)
    3   plan validation failure
    4   sample stream exhausted mid-stage
    5   simulation below its conservativeness threshold
    64  usage error
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import DataError, DomainError, StreamExhausted
from .interval import Support, bounded_interval, unit_summary
from .plan import (
    AbsoluteGoal,
    FiniteSchedule,
    MixedGoal,
    MultistagePlan,
    RelativeGoal,
    TailedSchedule,
    build_schedule,
    default_zeta,
    execute_plan,
    min_final_sample_size,
    validate_plan,
)
from .sim import DIST_GRAMMAR, DistributionSpec, coverage_experiment, make_stream, plan_experiment

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_DATA = 2
EXIT_VALIDATION = 3
EXIT_EXHAUSTED = 4
EXIT_THRESHOLD = 5
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class CliFailure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- parsing helpers ----------------------------------------------------------------


def parse_bounds(text: str) -> Support:
    try:
        a, b = (float(x) for x in text.split(","))
        return Support(a, b)
    except (ValueError, DomainError) as exc:
        raise UsageError(f"--bounds expects '<a>,<b>' with a < b, got {text!r} ({exc})") from None


def parse_goal(text: str):
    kind, _, rest = text.partition(":")
    try:
        values = [float(x) for x in rest.split(",")] if rest else []
        if kind == "absolute" and len(values) == 1:
            return AbsoluteGoal(values[0])
        if kind == "relative" and len(values) == 1:
            return RelativeGoal(values[0])
        if kind == "mixed" and len(values) == 2:
            return MixedGoal(*values)
    except (ValueError, DomainError) as exc:
        raise UsageError(f"bad --goal {text!r}: {exc}") from None
    raise UsageError(f"--goal expects absolute:<eps> | relative:<eps> | mixed:<eps_a>,<eps_r>, got {text!r}")


def parse_schedule(text: str):
    kind, _, rest = text.partition(":")
    if kind in ("finite", "tailed"):
        try:
            count = int(rest)
        except ValueError:
            pass
        else:
            if count >= 1:
                return kind, count
    raise UsageError(f"--schedule expects finite:<s> | tailed:<tau> with a positive integer, got {text!r}")


def parse_dist(text: str, support: Support) -> DistributionSpec:
    try:
        return DistributionSpec.parse(text, support)
    except DomainError as exc:
        raise UsageError(f"bad --dist {text!r}: {exc}\naccepted grammar: {DIST_GRAMMAR}") from None


def read_values(path: str, support: Support):
    """One real per line; blank lines and ``#`` comments are skipped."""
    values = []
    try:
        fh = open(path)
    except OSError as exc:
        raise CliFailure(EXIT_DATA, f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                x = float(text)
            except ValueError:
                raise CliFailure(EXIT_DATA, f"{path}:{lineno}: not a number: {text!r}") from None
            if not support.contains(x):
                raise CliFailure(
                    EXIT_DATA, f"{path}:{lineno}: value {x!r} outside bounds [{support.a!r}, {support.b!r}]"
                )
            values.append(x)
    return values


def resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("RNG_SEED")
    if env is None:
        raise UsageError("--seed is required (or set RNG_SEED)")
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"RNG_SEED must be an integer, got {env!r}") from None


def load_plan(path: str) -> MultistagePlan:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise CliFailure(EXIT_VALIDATION, f"cannot load plan {path}: {exc}") from None
    if isinstance(doc, dict) and "result" in doc:
        doc = doc["result"]
    if isinstance(doc, dict) and "plan" in doc:
        doc = doc["plan"]
    try:
        return MultistagePlan.from_dict(doc)
    except (DomainError, TypeError, ValueError) as exc:
        raise CliFailure(EXIT_VALIDATION, f"invalid plan {path}: {exc}") from None


def document(command: dict, result: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "result": result}


# -- commands -------------------------------------------------------------------------


def cmd_ci(args):
    support = parse_bounds(args.bounds)
    if args.input is not None:
        if args.n is not None or args.mean is not None:
            raise UsageError("give either --input or --n/--mean, not both")
        values = read_values(args.input, support)
        if not values:
            raise CliFailure(EXIT_DATA, f"{args.input}: no values")
        n, mean = len(values), float(np.cumsum(values)[-1] / len(values))
        source = {"input": args.input}
    else:
        if args.n is None or args.mean is None:
            raise UsageError("data required: --input <path> or both --n and --mean")
        if args.n < 1:
            raise UsageError(f"--n must be a positive integer, got {args.n}")
        if not support.contains(args.mean):
            raise CliFailure(EXIT_DATA, f"--mean {args.mean!r} outside bounds [{support.a!r}, {support.b!r}]")
        n, mean = args.n, args.mean
        source = {"n": n, "mean": mean}
    summary = unit_summary(n, mean, support)
    try:
        raw = bounded_interval(summary, args.delta, support, clamp=False)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    est = bounded_interval(summary, args.delta, support, clamp=not args.raw)
    command = {"name": "ci", **source, "delta": args.delta, "bounds": [support.a, support.b], "raw": args.raw}
    result = {
        "n": n,
        "mean": mean,
        "lower": est.lower,
        "upper": est.upper,
        "clamped": est.clamped,
        "raw_lower": raw.lower,
        "raw_upper": raw.upper,
        "confidence": 1.0 - args.delta,
    }
    text = f"{100 * (1 - args.delta):g}% interval for the mean: ({est.lower:.6g}, {est.upper:.6g}), n = {n}"
    return document(command, result), text, EXIT_OK


def cmd_plan_build(args):
    goal = parse_goal(args.goal)
    kind, count = parse_schedule(args.schedule)
    support = parse_bounds(args.bounds)
    zeta = args.zeta if args.zeta is not None else default_zeta(kind, count)
    if args.n1 < 1 or not args.growth > 1:
        raise UsageError("--n1 must be >= 1 and --growth must exceed 1")
    try:
        if kind == "finite":
            schedule = FiniteSchedule(count, zeta)
            sizes = list(build_schedule(args.n1, args.growth, count))
            eps = goal.eps if isinstance(goal, AbsoluteGoal) else getattr(goal, "eps_a", None)
            if eps is not None and count * zeta < 1:
                sizes[-1] = max(sizes[-1], min_final_sample_size(eps, zeta, args.delta, support))
            growth = None
        else:
            schedule = TailedSchedule(count, zeta, args.max_stages)
            sizes = list(build_schedule(args.n1, args.growth, count + 1))
            growth = args.growth
        plan = MultistagePlan(tuple(sizes), schedule, goal, args.delta, support, growth)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    report = validate_plan(plan)
    command = {
        "name": "plan build",
        "goal": args.goal,
        "delta": args.delta,
        "schedule": args.schedule,
        "zeta": zeta,
        "n1": args.n1,
        "growth": args.growth,
        "bounds": [support.a, support.b],
        "max_stages": args.max_stages,
    }
    if not report.ok:
        doc = document(command, {"valid": False, "violations": report.violations, "warnings": report.warnings})
        return doc, "\n".join(["plan is invalid:"] + [f"  {v}" for v in report.violations]), EXIT_VALIDATION
    result = {"plan": plan.to_dict(), "warnings": report.warnings}
    summary = f"plan with sample sizes {list(plan.sample_sizes)}"
    if report.warnings:
        summary += "\n" + "\n".join(f"warning: {w}" for w in report.warnings)
    return document(command, result), summary, EXIT_OK


def cmd_plan_run(args):
    plan = load_plan(args.plan)
    report = validate_plan(plan)
    if not report.ok:
        raise CliFailure(EXIT_VALIDATION, "plan is invalid:\n" + "\n".join(f"  {v}" for v in report.violations))
    command = {"name": "plan run", "plan": plan.to_dict()}
    if args.input is not None:
        if args.dist is not None:
            raise UsageError("give either --input or --dist, not both")
        source = read_values(args.input, plan.support)
        command["input"] = args.input
    else:
        if args.dist is None:
            raise UsageError("a sample source is required: --input <path> or --dist <spec> --seed <int>")
        spec = parse_dist(args.dist, plan.support)
        seed = resolve_seed(args.seed)
        source = make_stream(spec, seed)
        command.update(dist=str(spec), seed=seed)
    try:
        trace = execute_plan(plan, source)
    except StreamExhausted as exc:
        raise CliFailure(EXIT_EXHAUSTED, f"{exc} (stage {exc.stage}, short by {exc.shortfall})") from None
    except DataError as exc:
        raise CliFailure(EXIT_DATA, str(exc)) from None
    result = trace.to_dict()
    if trace.estimate is None:
        summary = f"stage cap reached after {trace.samples_used} samples; no estimate certified"
    else:
        summary = f"stopped at stage {trace.terminal_stage} with n = {trace.samples_used}: estimate {trace.estimate:.6g}"
    return document(command, result), summary, EXIT_OK


def cmd_simulate_coverage(args):
    support = parse_bounds(args.bounds)
    spec = parse_dist(args.dist, support)
    seed = resolve_seed(args.seed)
    if args.n < 1 or args.trials < 1:
        raise UsageError("--n and --trials must be positive")
    try:
        report = coverage_experiment(spec, args.n, args.delta, args.trials, seed, workers=args.workers)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    command = {
        "name": "simulate coverage",
        "dist": str(spec),
        "bounds": [support.a, support.b],
        "n": args.n,
        "delta": args.delta,
        "trials": args.trials,
        "seed": seed,
    }
    result = {"exact_mean": spec.exact_mean, **report.to_dict()}
    summary = (
        f"coverage {report.empirical_coverage:.6f} over {report.trials} trials "
        f"(nominal {report.nominal:g}, threshold {report.threshold:.6f}): {'PASS' if report.passed else 'FAIL'}"
    )
    return document(command, result), summary, EXIT_OK if report.passed else EXIT_THRESHOLD


def cmd_simulate_plan(args):
    plan = load_plan(args.plan)
    report = validate_plan(plan)
    if not report.ok:
        raise CliFailure(EXIT_VALIDATION, "plan is invalid:\n" + "\n".join(f"  {v}" for v in report.violations))
    spec = parse_dist(args.dist, plan.support)
    seed = resolve_seed(args.seed)
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    rep = plan_experiment(spec, plan, args.trials, seed, workers=args.workers)
    command = {"name": "simulate plan", "dist": str(spec), "plan": plan.to_dict(), "trials": args.trials, "seed": seed}
    result = {"exact_mean": spec.exact_mean, **rep.to_dict()}
    summary = (
        f"success rate {rep.success_rate:.6f} over {rep.trials} trials, mean samples {rep.mean_samples:.1f}, "
        f"nonterminated {rep.nonterminated}: {'PASS' if rep.passed else 'FAIL'}"
    )
    return document(command, result), summary, EXIT_OK if rep.passed else EXIT_THRESHOLD


# -- wiring ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boundedmean", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ci = sub.add_parser("ci", help="confidence interval for a bounded mean")
    ci.add_argument("--delta", type=float, required=True, help="error probability; confidence is 1 - delta")
    ci.add_argument("--input", help="file with one value per line")
    ci.add_argument("--n", type=int, help="sample count (with --mean)")
    ci.add_argument("--mean", type=float, help="sample mean on the original scale (with --n)")
    ci.add_argument("--bounds", default="0,1", help="support a,b (default 0,1); use --bounds=-1,1 for negatives")
    ci.add_argument("--raw", action="store_true", help="do not clamp the limits to the bounds")
    ci.set_defaults(func=cmd_ci)

    plan = sub.add_parser("plan", help="build or run multistage plans")
    psub = plan.add_subparsers(dest="plan_command", required=True, parser_class=_Parser)

    build = psub.add_parser("build", help="emit a validated plan document")
    build.add_argument("--goal", required=True, help="absolute:<eps> | relative:<eps> | mixed:<eps_a>,<eps_r>")
    build.add_argument("--delta", type=float, required=True)
    build.add_argument("--schedule", required=True, help="finite:<s> | tailed:<tau>")
    build.add_argument("--zeta", type=float, help="per-stage budget multiplier (default 1/(2s) or 1/(2(tau+1)))")
    build.add_argument("--n1", type=int, default=100, help="first stage size (default 100)")
    build.add_argument("--growth", type=float, default=2.0, help="geometric growth of stage sizes (default 2)")
    build.add_argument("--bounds", default="0,1")
    build.add_argument("--max-stages", type=int, dest="max_stages", help="stage cap for tailed schedules")
    build.set_defaults(func=cmd_plan_build)

    run = psub.add_parser("run", help="execute a plan on data or a simulated stream")
    run.add_argument("--plan", required=True)
    run.add_argument("--input", help="file consumed sequentially as the sample stream")
    run.add_argument("--dist", help=DIST_GRAMMAR)
    run.add_argument("--seed", type=int, help="stream seed (default: $RNG_SEED)")
    run.set_defaults(func=cmd_plan_run)

    sim = sub.add_parser("simulate", help="Monte Carlo coverage and plan experiments")
    ssub = sim.add_subparsers(dest="sim_command", required=True, parser_class=_Parser)

    cov = ssub.add_parser("coverage", help="empirical coverage of the interval")
    cov.add_argument("--dist", required=True, help=DIST_GRAMMAR)
    cov.add_argument("--n", type=int, required=True)
    cov.add_argument("--delta", type=float, required=True)
    cov.add_argument("--trials", type=int, required=True)
    cov.add_argument("--seed", type=int)
    cov.add_argument("--bounds", default="0,1")
    cov.add_argument("--workers", type=int, default=1, help="worker threads; does not change results")
    cov.set_defaults(func=cmd_simulate_coverage)

    sp = ssub.add_parser("plan", help="empirical success rate of a plan")
    sp.add_argument("--dist", required=True, help=DIST_GRAMMAR)
    sp.add_argument("--plan", required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int, default=1, help="worker threads; does not change results")
    sp.set_defaults(func=cmd_simulate_plan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        doc, summary, code = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"boundedmean: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CliFailure as exc:
        print(f"boundedmean: {exc}", file=sys.stderr)
        return exc.code
    sys.stdout.write(json.dumps(doc, indent=2, allow_nan=False) + "\n")
    sys.stdout.flush()
    print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
