"""
Confidence intervals for a bounded mean
=======================================

Build intervals from raw samples and from summaries. Compare them with the
plain Hoeffding interval and look at how their width changes with the mean.
"""

import numpy as np

import boundedmean as bm

###############################################################################
# An interval from raw data
# -------------------------
# Ten thousand draws on [0, 1] with a small mean. The interval adapts to the
# low variance, so it is much narrower than a variance-free bound.

rng = np.random.default_rng(0)
x = rng.beta(1, 30, size=10_000)
est = bm.bounded_interval(x, delta=0.05)
h_lo, h_hi = bm.hoeffding_interval(bm.UnitSummary(x.size, x.mean()), 0.05)
print(f"mean {x.mean():.5f}")
print(f"adaptive  [{est.lower:.5f}, {est.upper:.5f}]  width {est.width:.5f}")
print(f"hoeffding [{h_lo:.5f}, {h_hi:.5f}]  width {h_hi - h_lo:.5f}")

###############################################################################
# Other supports
# --------------
# Samples on [a, b] are rescaled internally. Constant data at the midpoint
# gives an interval that is symmetric about it.

est = bm.bounded_interval(np.full(10, 4.0), delta=0.1, support=bm.Support(2, 6))
print(f"\nconstant 4 on [2, 6]: [{est.lower:.4f}, {est.upper:.4f}]")

###############################################################################
# Width profile
# -------------
# The half-widths shrink near the ends of the support. Their largest value
# is the quantity that sizes the final stage of a multistage plan.

n, delta = 100, 0.05
z = np.linspace(0, 1, 11)
params = bm.ConfidenceParams(delta)
for zi in z:
    lo, hi = bm.unit_interval(bm.UnitSummary(n, float(zi)), params)
    print(f"z = {zi:.1f}  L = {lo:+.4f}  U = {hi:.4f}")
w, where = bm.max_halfwidth(n, params, return_location=True)
print(f"largest half-width {w:.5f} at z = {where:.4f}")
