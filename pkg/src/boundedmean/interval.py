"""Closed-form confidence interval for the mean of a bounded random variable.

Observations bounded in ``[a, b]`` are mapped to ``[0, 1]`` by
``z = (x - a) / (b - a)``.  For ``n`` observations with unit-scale mean
``zbar`` and confidence ``1 - delta`` the limits are::

    c = 9 / (2 ln(2 / delta))
    L = zbar + 3 / (4 + n c) * (1 - 2 zbar - sqrt(1 + n c zbar (1 - zbar)))
    U = zbar + 3 / (4 + n c) * (1 - 2 zbar + sqrt(1 + n c zbar (1 - zbar)))

and ``Pr{L < mu < U} >= 1 - delta``.  The interval comes from combining
Hoeffding's tail bound with Massart's quadratic lower bound on the
Bernoulli Kullback-Leibler divergence, which makes it variance adaptive:
it is much narrower than the plain Hoeffding band when the mean sits near
0 or 1.

The functions :func:`epsilon_root` and :func:`t_map` are the building
blocks of the derivation (half-width as a function of the true mean, and
the map from an observed mean to the lower limit).  They are exposed so the
closed form can be checked against them and against a root finder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DataError, DomainError

__all__ = [
    "DELTA_MIN",
    "ConfidenceParams",
    "UnitSummary",
    "Support",
    "IntervalEstimate",
    "massart_c",
    "summarize",
    "unit_summary",
    "unit_interval",
    "bounded_interval",
    "epsilon_root",
    "t_map",
    "eq1_residual",
    "hoeffding_interval",
    "max_halfwidth",
]

# ln(2/delta) and c stay finite and well conditioned inside this range.
DELTA_MIN = 1e-12


def _check_delta(delta):
    delta = float(delta)
    if not (DELTA_MIN <= delta <= 1.0 - DELTA_MIN):
        raise DomainError(f"delta must lie in [{DELTA_MIN:g}, 1 - {DELTA_MIN:g}], got {delta!r}")
    return delta


def massart_c(delta: float) -> float:
    """Return the tuning constant ``9 / (2 ln(2/delta))``."""
    delta = _check_delta(delta)
    return 9.0 / (2.0 * math.log(2.0 / delta))


@dataclass(frozen=True)
class ConfidenceParams:
    """Confidence level ``1 - delta`` together with its constant ``c``."""

    delta: float

    def __post_init__(self):
        object.__setattr__(self, "delta", _check_delta(self.delta))

    @property
    def c(self) -> float:
        return massart_c(self.delta)


def _as_params(params) -> ConfidenceParams:
    if isinstance(params, ConfidenceParams):
        return params
    return ConfidenceParams(params)


@dataclass(frozen=True)
class UnitSummary:
    """Sample count and sample mean of observations already scaled to [0, 1]."""

    n: int
    mean: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"sample count must be a positive integer, got {self.n!r}")
        if not (0.0 <= self.mean <= 1.0):
            raise DomainError(f"unit-scale mean must lie in [0, 1], got {self.mean!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "mean", float(self.mean))


@dataclass(frozen=True)
class Support:
    """Closed interval ``[a, b]`` that contains every observation."""

    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"support bounds must be finite, got ({a!r}, {b!r})")
        if not a < b:
            raise DomainError(f"support requires a < b, got ({a!r}, {b!r})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def width(self) -> float:
        return self.b - self.a

    def scale(self, x):
        """Map original-scale values to [0, 1]."""
        return (x - self.a) / (self.b - self.a)

    def unscale(self, z):
        """Map unit-scale values back to [a, b]."""
        return (self.b - self.a) * z + self.a

    def contains(self, x) -> bool:
        return self.a <= x <= self.b


@dataclass(frozen=True)
class IntervalEstimate:
    lower: float
    upper: float
    clamped: bool = False

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise DomainError(f"lower limit {self.lower!r} exceeds upper limit {self.upper!r}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value, strict=True) -> bool:
        if strict:
            return self.lower < value < self.upper
        return self.lower <= value <= self.upper


def summarize(samples: Iterable[float], support: Support = Support()) -> UnitSummary:
    """Validate ``samples`` against ``support`` and reduce them to a unit summary.

    Raises
    ------
    DataError
        If a sample is outside ``[a, b]`` (or not finite); ``index`` names it.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DataError("no samples given")
    bad = np.flatnonzero(~((x >= support.a) & (x <= support.b)))
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"sample {i} = {x[i]!r} lies outside the support [{support.a!r}, {support.b!r}]",
            index=i,
        )
    return unit_summary(x.size, np.cumsum(x)[-1] / x.size, support)


def unit_summary(n: int, mean: float, support: Support = Support()) -> UnitSummary:
    """Build a unit summary from a count and an original-scale mean."""
    z = float(support.scale(mean))
    # Rounding in the scaling can push the mean a hair past the ends.
    if -1e-12 <= z < 0.0 or 1.0 < z <= 1.0 + 1e-12:
        z = min(max(z, 0.0), 1.0)
    return UnitSummary(n, z)


def _unit_limits(n, z, c):
    """Raw limits for unit-scale means; ``n`` and ``z`` may be arrays."""
    nc = n * c
    radicand = np.maximum(1.0 + nc * z * (1.0 - z), 1.0)
    root = np.sqrt(radicand)
    k = 3.0 / (4.0 + nc)
    lower = z + k * (1.0 - 2.0 * z - root)
    upper = z + k * (1.0 - 2.0 * z + root)
    return lower, upper


def unit_interval(summary: UnitSummary, params) -> tuple[float, float]:
    """Raw ``(L, U)`` for a unit-scale summary.

    The limits are returned exactly as the closed form gives them, so they may
    leave [0, 1]; use :func:`bounded_interval` for clamped output.
    """
    params = _as_params(params)
    lower, upper = _unit_limits(summary.n, summary.mean, params.c)
    return float(lower), float(upper)


def bounded_interval(
    data: Union[UnitSummary, Iterable[float]],
    delta,
    support: Support = Support(),
    clamp: bool = True,
) -> IntervalEstimate:
    """Confidence interval for the mean of observations bounded in ``support``.

    Parameters
    ----------
    data : UnitSummary or array_like
        Either raw observations on the original scale, which are validated
        against ``support``, or a summary already mapped to [0, 1].
    delta : float or ConfidenceParams
        Error probability; the interval has confidence ``1 - delta``.
    support : Support
        Bounds ``[a, b]`` of the random variable.
    clamp : bool
        Clip the limits to ``[a, b]``.  This never lowers coverage because the
        mean lies in ``[a, b]`` with probability one.

    Returns
    -------
    IntervalEstimate
    """
    summary = data if isinstance(data, UnitSummary) else summarize(data, support)
    lo, hi = unit_interval(summary, delta)
    lower, upper = support.unscale(lo), support.unscale(hi)
    if clamp:
        lower = min(max(lower, support.a), support.b)
        upper = min(max(upper, support.a), support.b)
    return IntervalEstimate(lower, upper, clamped=clamp)


def epsilon_root(t, n: int, params):
    """Nonnegative root in ``eps`` of ``exp(-n eps^2 / (2 (t + eps/3)(1 - t - eps/3))) = delta/2``.

    With ``alpha = 1/(n c)`` the root is
    ``[3 alpha (1 - 2t) + 3 sqrt(alpha^2 + 4 alpha t (1 - t))] / (2 (1 + alpha))``.
    Accepts scalar or array ``t`` in [0, 1].
    """
    params = _as_params(params)
    alpha = 1.0 / (n * params.c)
    t = np.asarray(t, dtype=float)
    eps = (3.0 * alpha * (1.0 - 2.0 * t) + 3.0 * np.sqrt(alpha**2 + 4.0 * alpha * t * (1.0 - t))) / (
        2.0 * (1.0 + alpha)
    )
    return eps if eps.ndim else float(eps)


def t_map(z, n: int, params):
    """Map an observed unit-scale mean ``z`` to the point ``t <= z`` with ``z - t = epsilon_root(t)``.

    ``t_map(zbar)`` coincides with the raw lower limit of :func:`unit_interval`.
    """
    params = _as_params(params)
    beta = 4.0 / (n * params.c)
    z = np.asarray(z, dtype=float)
    t = z + (3.0 * beta * (1.0 - 2.0 * z) - 3.0 * np.sqrt(beta**2 + 4.0 * beta * z * (1.0 - z))) / (
        4.0 * (1.0 + beta)
    )
    return t if t.ndim else float(t)


def eq1_residual(t: float, eps: float, n: int, params) -> float:
    """Residual ``exp(-n eps^2 / (2 q (1 - q))) - delta/2`` with ``q = t + eps/3``."""
    params = _as_params(params)
    q = t + eps / 3.0
    if not (0.0 < q < 1.0):
        raise DomainError(f"t + eps/3 must lie in (0, 1), got {q!r}")
    return math.exp(-n * eps**2 / (2.0 * q * (1.0 - q))) - params.delta / 2.0


def hoeffding_interval(summary: UnitSummary, delta) -> tuple[float, float]:
    """Plain two-sided Hoeffding band ``mean +- sqrt(ln(2/delta) / (2n))`` (unclamped)."""
    delta = _as_params(delta).delta
    half = math.sqrt(math.log(2.0 / delta) / (2.0 * summary.n))
    return summary.mean - half, summary.mean + half


def _larger_halfwidth(z, n, c):
    lower, upper = _unit_limits(n, z, c)
    return np.maximum(upper - z, z - lower)


def max_halfwidth(n: int, params, grid_step: float = 1e-4, xtol: float = 1e-8, return_location: bool = False):
    """Largest half-width ``max(U(z) - z, z - L(z))`` over unit-scale means ``z``.

    A grid scan locates the maximum, which is then polished by bounded Brent
    search on the neighbouring grid cells.

    Returns
    -------
    float, or (float, float) with the maximizing ``z`` when ``return_location``.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    c = _as_params(params).c
    grid = np.linspace(0.0, 1.0, int(round(1.0 / grid_step)) + 1)
    values = _larger_halfwidth(grid, n, c)
    k = int(np.argmax(values))
    best_z, best = float(grid[k]), float(values[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(
        lambda z: -float(_larger_halfwidth(z, n, c)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xtol},
    )
    if -res.fun > best:
        best_z, best = float(res.x), float(-res.fun)
    return (best, best_z) if return_location else best
