"""
A small coverage study
======================

Check the guaranteed coverage by simulation, then measure how a plan trades
samples for precision. Every number here is reproducible from the seed.
"""

import boundedmean as bm
from boundedmean.sim import DistributionSpec, coverage_sweep, plan_experiment

###############################################################################
# Coverage across means
# ---------------------
# Coverage should stay above 1 - delta for every distribution, including the
# skewed ones where normal-approximation intervals fail.

for text in ["bernoulli:0.01", "bernoulli:0.5", "beta:0.5,0.5", "twopoint:0.1,0.95,0.03"]:
    spec = DistributionSpec.parse(text)
    for rep in coverage_sweep(spec, 30, [0.1, 0.05], trials=20_000, seed=1):
        print(f"{text:24s} level={rep.nominal:.2f}  coverage={rep.empirical_coverage:.4f}")

###############################################################################
# Cost of a plan
# --------------
# Distributions far from 1/2 have small variance and stop early.

eps, delta, zeta = 0.05, 0.05, 0.1
sizes = bm.build_schedule(326, 1.5, 5)
plan = bm.MultistagePlan(sizes, bm.FiniteSchedule(5, zeta), bm.AbsoluteGoal(eps), delta)
for p in (0.05, 0.2, 0.5):
    rep = plan_experiment(DistributionSpec.parse(f"bernoulli:{p}"), plan, trials=5000, seed=2)
    print(f"p = {p:.2f}  success {rep.success_rate:.4f}  mean samples {rep.mean_samples:7.1f}  stages {dict(sorted(rep.stage_histogram.items()))}")
