"""
Running a multistage plan
=========================

Build an absolute-precision plan, run it once on a simulated stream and read
the stage-by-stage trace.
"""

import boundedmean as bm
from boundedmean.sim import DistributionSpec, make_stream

###############################################################################
# Sizing the last stage
# ---------------------
# With eps = 0.05, delta = 0.05 and five stages sharing zeta = 0.1, the final
# stage must be large enough that its interval is always narrow enough.

eps, delta, zeta = 0.05, 0.05, 0.1
n_last = bm.min_final_sample_size(eps, zeta, delta)
print("final stage needs", n_last, "samples")

###############################################################################
# A geometric schedule
# --------------------

sizes = bm.build_schedule(100, 2.0, 5)
sizes = sizes[:-1] + (max(sizes[-1], n_last),)
plan = bm.MultistagePlan(sizes, bm.FiniteSchedule(5, zeta), bm.AbsoluteGoal(eps), delta)
print("sample sizes", plan.sample_sizes)
print("valid:", bm.validate_plan(plan).ok)

###############################################################################
# One run
# -------
# Each stage reports its running mean and interval. The plan stops at the
# first stage whose interval satisfies the goal.

stream = make_stream(DistributionSpec.parse("bernoulli:0.3"), seed=42)
trace = bm.execute_plan(plan, stream)
for rec in trace.records:
    lo, hi = rec.interval.lower, rec.interval.upper
    print(f"stage {rec.stage}: n = {rec.n:5d}  mean = {rec.mean:.4f}  [{lo:.4f}, {hi:.4f}]  stop = {rec.stopped}")
print("estimate", trace.estimate, "after", trace.samples_used, "samples")
