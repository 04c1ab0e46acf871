import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundedmean import (
    ConfidenceParams,
    DataError,
    DomainError,
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
)

from oracles import eq1_root_bisect, limits_mp, lower_limit_bisect, max_halfwidth_closed

means = st.floats(0.0, 1.0, allow_nan=False)
sizes = st.integers(1, 10**6)
deltas = st.floats(1e-6, 0.5)


# -- massart_c ------------------------------------------------------------------


def test_c_is_one_when_log_term_is_nine_halves():
    assert massart_c(2 * math.exp(-4.5)) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("delta, expected", [(0.05, 1.2198826380681756), (0.5, 3.2460638420001677)])
def test_c_values(delta, expected):
    # expected values from 50-digit mpmath evaluation
    assert massart_c(delta) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.1, 1.5, 1e-13, float("nan")])
def test_c_rejects_out_of_range_delta(delta):
    with pytest.raises(DomainError):
        massart_c(delta)


def test_params_c_recomputes_from_delta():
    p = ConfidenceParams(0.1)
    assert p.c == 9 / (2 * math.log(2 / 0.1))


# -- unit_interval ----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 7, 100, 5000])
@pytest.mark.parametrize("delta", [0.01, 0.05, 0.3])
def test_zero_mean_collapses(n, delta):
    lower, upper = unit_interval(UnitSummary(n, 0.0), delta)
    assert lower == 0.0
    assert upper == pytest.approx(6 / (4 + n * massart_c(delta)), rel=1e-15)


@pytest.mark.parametrize("n", [1, 10, 333])
def test_half_mean_is_symmetric(n):
    c = massart_c(0.05)
    lower, upper = unit_interval(UnitSummary(n, 0.5), 0.05)
    half = 3 / (4 + n * c) * math.sqrt(1 + n * c / 4)
    assert upper - 0.5 == pytest.approx(half, rel=1e-14)
    assert 0.5 - lower == pytest.approx(half, rel=1e-14)


def test_frozen_value_n100_mean03():
    lower, upper = unit_interval(UnitSummary(100, 0.3), 0.05)
    # closed form in 50-digit arithmetic: L = 0.18667471849826427..., U = 0.43237467489348853...
    assert lower == pytest.approx(0.1866747185, rel=5e-10)
    assert upper == pytest.approx(0.4323746749, rel=5e-10)
    ref_l, ref_u = limits_mp(100, 0.3, 0.05)
    assert abs(lower - ref_l) < 1e-15 and abs(upper - ref_u) < 1e-15
    # independent route: solve z - t = eps(t) on the tail equation by bisection
    assert abs(lower - lower_limit_bisect(0.3, 100, 0.05)) < 1e-9


@settings(max_examples=300, deadline=None)
@given(n=sizes, z=means, delta=deltas)
def test_limits_bracket_the_mean(n, z, delta):
    lower, upper = unit_interval(UnitSummary(n, z), delta)
    assert lower <= z <= upper


@settings(max_examples=200, deadline=None)
@given(n=sizes, z=means, delta=deltas)
def test_upper_mirrors_lower(n, z, delta):
    _, upper = unit_interval(UnitSummary(n, z), delta)
    lower_mirror, _ = unit_interval(UnitSummary(n, 1 - z), delta)
    assert upper == pytest.approx(1 - lower_mirror, abs=1e-12)


@pytest.mark.parametrize("z", [0.0, 0.05, 0.3, 0.5, 0.9])
def test_width_shrinks_with_n(z):
    widths = [np.subtract(*unit_interval(UnitSummary(n, z), 0.05)[::-1]) for n in (10, 20, 50, 100, 1000)]
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_radicand_guard_never_nan():
    lower, upper = unit_interval(UnitSummary(10**9, 1e-300), 1e-12)
    assert math.isfinite(lower) and math.isfinite(upper)


# -- bounded_interval -------------------------------------------------------------


def test_unit_support_is_identity():
    s = UnitSummary(40, 0.35)
    est = bounded_interval(s, 0.05, clamp=False)
    assert (est.lower, est.upper) == unit_interval(s, 0.05)
    assert not est.clamped


def test_all_max_on_symmetric_support():
    n, delta = 10, 0.05
    c = massart_c(delta)
    raw = bounded_interval([1.0] * n, delta, Support(-1, 1), clamp=False)
    assert raw.upper == pytest.approx(1.0, abs=1e-15)
    assert raw.lower == pytest.approx(1 - 2 * 6 / (4 + n * c), rel=1e-14)
    clamped = bounded_interval([1.0] * n, delta, Support(-1, 1))
    assert clamped.upper == 1.0 and clamped.clamped


def test_affine_equivariance_on_bernoulli_stream():
    rng = np.random.default_rng(3)
    z = (rng.random(50) < 0.5).astype(float)
    x = 4 * z + 2
    est = bounded_interval(x, 0.05, Support(2, 6), clamp=False)
    lo, hi = unit_interval(summarize(z), 0.05)
    assert est.lower == pytest.approx(4 * lo + 2, rel=1e-12)
    assert est.upper == pytest.approx(4 * hi + 2, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(1, 10**5),
    z=means,
    a=st.floats(-1e3, 1e3),
    width=st.floats(1e-3, 1e3),
)
def test_affine_equivariance_property(n, z, a, width):
    s = Support(a, a + width)
    est = bounded_interval(UnitSummary(n, z), 0.1, s, clamp=False)
    lo, hi = unit_interval(UnitSummary(n, z), 0.1)
    scale = max(abs(a), abs(a + width), 1.0)
    assert est.lower == pytest.approx(width * lo + a, rel=1e-12, abs=1e-12 * scale)
    assert est.upper == pytest.approx(width * hi + a, rel=1e-12, abs=1e-12 * scale)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 500), z=means)
def test_clamped_limits_stay_in_support(n, z):
    s = Support(-3, 5)
    est = bounded_interval(UnitSummary(n, z), 0.05, s)
    assert s.a <= est.lower <= est.upper <= s.b


def test_sample_outside_support_names_index():
    with pytest.raises(DataError) as info:
        bounded_interval([0.1, 0.5, 1.2, 0.3], 0.05)
    assert info.value.index == 2
    assert "sample 2" in str(info.value)


def test_bad_support_rejected():
    with pytest.raises(DomainError):
        Support(1, 1)
    with pytest.raises(DomainError):
        Support(0, float("inf"))


# -- epsilon_root / eq1 ----------------------------------------------------------


def test_epsilon_root_endpoints():
    n, delta = 37, 0.05
    alpha = 1 / (n * massart_c(delta))
    assert epsilon_root(0.0, n, delta) == pytest.approx(3 * alpha / (1 + alpha), rel=1e-15)
    assert epsilon_root(1.0, n, delta) == pytest.approx(0.0, abs=1e-16)


def test_epsilon_root_matches_bisection_at_03():
    eps = epsilon_root(0.3, 100, 0.05)
    assert abs(eps - eq1_root_bisect(0.3, 100, 0.05)) < 1e-10
    assert eps == pytest.approx(0.12893946643189198, rel=1e-13)  # 40-digit mpmath


@pytest.mark.parametrize("t", np.linspace(0.0, 0.95, 20))
def test_residual_vanishes_at_root(t):
    eps = epsilon_root(t, 80, 0.1)
    assert abs(eq1_residual(t, eps, 80, 0.1)) < 1e-12


def test_residual_at_zero_eps():
    assert eq1_residual(0.4, 0.0, 10, 0.05) == pytest.approx(1 - 0.025, abs=1e-16)


@pytest.mark.parametrize("t", [0.05, 0.3, 0.5, 0.8])
def test_residual_negative_past_root(t):
    eps = epsilon_root(t, 100, 0.05) + 0.01
    assert eq1_residual(t, eps, 100, 0.05) < 0


def test_residual_domain():
    with pytest.raises(DomainError):
        eq1_residual(0.9, 0.6, 10, 0.05)


@settings(max_examples=300, deadline=None)
@given(t=means, n=sizes, delta=deltas)
def test_epsilon_root_nonnegative(t, n, delta):
    assert epsilon_root(t, n, delta) >= -1e-15


# -- t_map ------------------------------------------------------------------------


def test_t_map_at_zero():
    assert t_map(0.0, 25, 0.05) == 0.0


@settings(max_examples=300, deadline=None)
@given(n=sizes, z=means, delta=deltas)
def test_t_map_is_lower_limit(n, z, delta):
    lower, _ = unit_interval(UnitSummary(n, z), delta)
    assert t_map(z, n, delta) == pytest.approx(lower, abs=1e-12)
    assert t_map(z, n, delta) <= z + 1e-15


def test_t_map_fixed_point_at_07():
    t = t_map(0.7, 200, 0.1)
    assert abs((0.7 - t) - epsilon_root(t, 200, 0.1)) < 1e-10


def test_t_map_can_go_negative():
    # raw limits are allowed to leave [0, 1]
    assert t_map(0.01, 5, 0.05) < 0


# -- hoeffding baseline ------------------------------------------------------------


def test_hoeffding_unit_band():
    delta = 0.05
    # n = 2 ln(2/delta) is not an integer; use the defining relation directly
    n = 2 * math.log(2 / delta)
    half = math.sqrt(math.log(2 / delta) / (2 * n))
    assert half == pytest.approx(0.5)
    lo, hi = hoeffding_interval(UnitSummary(100, 0.5), delta)
    assert hi - 0.5 == pytest.approx(math.sqrt(math.log(40) / 200), rel=1e-15)
    assert 0.5 - lo == pytest.approx(math.sqrt(math.log(40) / 200), rel=1e-15)


@pytest.mark.parametrize("n", [10, 100, 1000, 10**5])
@pytest.mark.parametrize("z", [0.0, 0.001, 0.01, 0.05])
def test_massart_tighter_than_hoeffding_near_zero(n, z):
    _, upper = unit_interval(UnitSummary(n, z), 0.05)
    _, h_upper = hoeffding_interval(UnitSummary(n, z), 0.05)
    assert upper < h_upper


@pytest.mark.parametrize("z", [0.2, 0.5, 0.77])
def test_hoeffding_width_independent_of_mean(z):
    lo, hi = hoeffding_interval(UnitSummary(64, z), 0.1)
    lo0, hi0 = hoeffding_interval(UnitSummary(64, 0.5), 0.1)
    assert hi - lo == pytest.approx(hi0 - lo0, rel=1e-14)


# -- max_halfwidth -------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 5, 10, 100, 1199, 10**4])
@pytest.mark.parametrize("delta", [0.005, 0.05, 0.2])
def test_max_halfwidth_matches_analytic_maximum(n, delta):
    value, where = max_halfwidth(n, delta, return_location=True)
    ref, ref_where = max_halfwidth_closed(n, delta)
    assert value == pytest.approx(ref, rel=1e-9)
    assert min(abs(where - ref_where), abs(where - (1 - ref_where))) < 1e-4


@pytest.mark.parametrize("n", [10, 100, 1199, 10**4])
def test_maximizer_is_not_the_midpoint(n):
    # the half-width at z = 1/2 is strictly below the supremum
    value = max_halfwidth(n, 0.05)
    lower, upper = unit_interval(UnitSummary(n, 0.5), 0.05)
    assert upper - 0.5 < value
    # the supremum equals the Hoeffding half-width once nc >= 4
    assert value == pytest.approx(math.sqrt(math.log(40) / (2 * n)), rel=1e-9)


def test_max_halfwidth_scales_like_inverse_root_n():
    ratio = max_halfwidth(2 * 10**4, 0.05) / max_halfwidth(10**4, 0.05)
    assert 0.65 < ratio < 0.75


def test_max_halfwidth_under_eps_at_sizing_rule():
    delta, eps = 0.05, 0.05
    n = math.ceil(math.log(2 / delta) / (2 * eps**2)) + 1
    assert max_halfwidth(n, delta) < eps
