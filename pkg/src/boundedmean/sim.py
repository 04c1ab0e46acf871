"""Seeded Monte Carlo checks of interval coverage and plan success rates.

Trial ``i`` of an experiment with master seed ``seed`` draws from substream
``i`` of :mod:`boundedmean.rng`.  Trials are processed in fixed-size chunks,
and per-chunk results are counts and integer sums, so reports are identical
for any number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError
from .interval import Support
from .plan import MultistagePlan, PlanValidationError, stage_limits, stop_mask, validate_plan
from .rng import substream_key, substream_keys, uniform_block

__all__ = [
    "FAMILIES",
    "DistributionSpec",
    "SampleStream",
    "CoverageReport",
    "PlanReport",
    "make_stream",
    "coverage_experiment",
    "coverage_sweep",
    "plan_experiment",
]

# family name -> parameter names
FAMILIES = {
    "bernoulli": ("p",),
    "beta": ("alpha", "beta"),
    "uniform": (),
    "pointmass": ("v",),
    "twopoint": ("v0", "v1", "p"),
}

DIST_GRAMMAR = "bernoulli:<p> | beta:<alpha>,<beta> | uniform | pointmass:<v> | twopoint:<v0>,<v1>,<p>"

CHUNK = 4096


@dataclass(frozen=True)
class DistributionSpec:
    """Test distribution on ``support``.

    Bernoulli and Beta draws live on [0, 1] and are mapped affinely onto the
    support; ``pointmass`` and ``twopoint`` values are given on the original
    scale.  ``twopoint`` takes ``v1`` with probability ``p`` and ``v0``
    otherwise.
    """

    family: str
    params: tuple[float, ...] = ()
    support: Support = field(default_factory=Support)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown distribution family {self.family!r}; expected {DIST_GRAMMAR}")
        params = tuple(float(p) for p in self.params)
        names = FAMILIES[self.family]
        if len(params) != len(names):
            raise DomainError(f"{self.family} takes {len(names)} parameter(s) {names}, got {len(params)}")
        object.__setattr__(self, "params", params)
        p = dict(zip(names, params))
        if "p" in p and not 0.0 <= p["p"] <= 1.0:
            raise DomainError(f"probability p must lie in [0, 1], got {p['p']!r}")
        if self.family == "beta" and not (p["alpha"] > 0 and p["beta"] > 0):
            raise DomainError(f"beta shape parameters must be positive, got {params}")
        for name in ("v", "v0", "v1"):
            if name in p and not self.support.contains(p[name]):
                raise DomainError(f"{name} = {p[name]!r} lies outside the support [{self.support.a}, {self.support.b}]")

    @classmethod
    def parse(cls, text: str, support: Support = Support()) -> "DistributionSpec":
        """Parse ``family[:param[,param...]]``."""
        family, _, rest = text.strip().partition(":")
        family = family.strip().lower()
        try:
            params = tuple(float(x) for x in rest.split(",")) if rest.strip() else ()
        except ValueError:
            raise DomainError(f"malformed distribution {text!r}; expected {DIST_GRAMMAR}") from None
        return cls(family, params, support)

    def __str__(self):
        if not self.params:
            return self.family
        return self.family + ":" + ",".join(repr(p) for p in self.params)

    @property
    def exact_mean(self) -> float:
        s = self.support
        if self.family == "bernoulli":
            return s.unscale(self.params[0])
        if self.family == "beta":
            a, b = self.params
            return s.unscale(a / (a + b))
        if self.family == "uniform":
            return 0.5 * (s.a + s.b)
        if self.family == "pointmass":
            return self.params[0]
        v0, v1, p = self.params
        return (1.0 - p) * v0 + p * v1

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on [0, 1) to draws by inversion."""
        s = self.support
        if self.family == "bernoulli":
            return np.where(u < self.params[0], s.b, s.a)
        if self.family == "twopoint":
            v0, v1, p = self.params
            return np.where(u < p, v1, v0)
        if self.family == "pointmass":
            return np.full(u.shape, self.params[0])
        if self.family == "uniform":
            return s.unscale(u)
        a, b = self.params
        if a == 0.5 and b == 0.5:
            q = np.sin(0.5 * np.pi * u) ** 2  # arcsine law
        else:
            q = special.betaincinv(a, b, u)
        return np.clip(s.unscale(q), s.a, s.b)


class SampleStream:
    """Reproducible infinite stream of draws from ``spec``.

    Supports iteration and bulk :meth:`take`; both advance the same cursor.
    """

    def __init__(self, spec: DistributionSpec, seed: int, substream: int = 0):
        self.spec = spec
        self.seed = int(seed)
        self.substream = int(substream)
        self._key = np.array([substream_key(self.seed, self.substream)], dtype=np.uint64)
        self.position = 0
        self._buf = np.empty(0)
        self._i = 0

    def take(self, k: int) -> np.ndarray:
        head = self._buf[self._i :]
        self._buf, self._i = np.empty(0), 0
        if head.size >= k:
            self._buf, self._i = head, k
            return head[:k]
        start = self.position
        new = self.spec.transform(uniform_block(self._key, start, start + k - head.size)[0])
        self.position = start + k - head.size
        return np.concatenate((head, new))

    def __iter__(self):
        return self

    def __next__(self) -> float:
        if self._i >= self._buf.size:
            self._buf = self.take(1024)
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return float(x)


def make_stream(spec: DistributionSpec, seed: int, substream: int = 0) -> SampleStream:
    return SampleStream(spec, seed, substream)


def _draw(spec, keys, start, stop):
    return spec.transform(uniform_block(keys, start, stop))


def _chunks(trials, chunk):
    return [(t0, min(t0 + chunk, trials)) for t0 in range(0, trials, chunk)]


def _map(fn, jobs, workers):
    if workers is None or workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# -- coverage -----------------------------------------------------------------


@dataclass(frozen=True)
class CoverageReport:
    trials: int
    hits: int
    nominal: float

    @property
    def empirical_coverage(self) -> float:
        return self.hits / self.trials

    @property
    def std_error(self) -> float:
        cov = self.empirical_coverage
        return math.sqrt(cov * (1.0 - cov) / self.trials)

    @property
    def threshold(self) -> float:
        return self.nominal - 3.0 * self.std_error

    @property
    def passed(self) -> bool:
        return self.empirical_coverage >= self.threshold

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "hits": self.hits,
            "empirical_coverage": self.empirical_coverage,
            "std_error": self.std_error,
            "nominal": self.nominal,
            "threshold": self.threshold,
            "passed": self.passed,
        }


def coverage_sweep(
    spec: DistributionSpec,
    n: int,
    deltas,
    trials: int,
    seed: int,
    workers: int = 1,
    chunk: int = CHUNK,
) -> list[CoverageReport]:
    """Coverage at several confidence levels from one shared set of draws.

    Equivalent to calling :func:`coverage_experiment` once per ``delta`` with
    the same seed, at the sampling cost of a single call.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    deltas = [float(d) for d in deltas]
    mu = spec.exact_mean

    def run(bounds):
        t0, t1 = bounds
        x = _draw(spec, substream_keys(seed, range(t0, t1)), 0, n)
        mean = np.cumsum(x, axis=1)[:, -1] / n
        hits = []
        for d in deltas:
            lower, upper = stage_limits(n, mean, d, spec.support)
            hits.append(int(np.count_nonzero((lower < mu) & (mu < upper))))
        return hits

    totals = np.sum(_map(run, _chunks(trials, chunk), workers), axis=0)
    return [CoverageReport(trials, int(h), 1.0 - d) for h, d in zip(totals, deltas)]


def coverage_experiment(
    spec: DistributionSpec,
    n: int,
    delta: float,
    trials: int,
    seed: int,
    workers: int = 1,
    chunk: int = CHUNK,
) -> CoverageReport:
    """Estimate ``Pr{L < mu < U}`` for samples of size ``n`` from ``spec``.

    Uses raw limits and strict inequalities, so a boundary mean counts as a miss.
    """
    return coverage_sweep(spec, n, [delta], trials, seed, workers, chunk)[0]


# -- plans --------------------------------------------------------------------


@dataclass(frozen=True)
class PlanReport:
    trials: int
    successes: int
    total_samples: int
    stage_histogram: dict[int, int]
    nonterminated: int
    delta: float

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def mean_samples(self) -> float:
        return self.total_samples / self.trials

    @property
    def std_error(self) -> float:
        r = self.success_rate
        return math.sqrt(r * (1.0 - r) / self.trials)

    @property
    def threshold(self) -> float:
        return (1.0 - self.delta) - 3.0 * self.std_error

    @property
    def passed(self) -> bool:
        return self.success_rate >= self.threshold

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "std_error": self.std_error,
            "nominal": 1.0 - self.delta,
            "threshold": self.threshold,
            "passed": self.passed,
            "mean_samples": self.mean_samples,
            "stage_histogram": {str(k): v for k, v in sorted(self.stage_histogram.items())},
            "nonterminated": self.nonterminated,
        }


def run_plan_batch(spec: DistributionSpec, plan: MultistagePlan, keys: np.ndarray):
    """Execute ``plan`` for one trial per key, vectorized across trials.

    Mirrors :func:`boundedmean.plan.execute_plan` operation for operation.

    Returns
    -------
    stage : ndarray of int
        Terminal stage per trial, 0 where the stage cap was reached.
    estimate : ndarray of float
        Terminal estimate, NaN where the stage cap was reached.
    used : ndarray of int
        Samples consumed per trial.
    """
    m = keys.shape[0]
    stage = np.zeros(m, dtype=np.int64)
    estimate = np.full(m, np.nan)
    used = np.zeros(m, dtype=np.int64)
    totals = np.zeros(m)
    active = np.arange(m)
    n_prev = 0
    for ell in range(1, plan.stage_cap + 1):
        if active.size == 0:
            break
        n = plan.stage_size(ell)
        x = _draw(spec, keys[active], n_prev, n)
        tot = np.cumsum(np.column_stack((totals[active], x)), axis=1)[:, -1]
        totals[active] = tot
        mean = tot / n
        lower, upper = stage_limits(n, mean, plan.stage_delta(ell), plan.support)
        stop = stop_mask(plan.goal, mean, lower, upper)
        used[active] = n
        done = active[stop]
        stage[done] = ell
        estimate[done] = mean[stop]
        active = active[~stop]
        n_prev = n
    return stage, estimate, used


def plan_experiment(
    spec: DistributionSpec,
    plan: MultistagePlan,
    trials: int,
    seed: int,
    workers: int = 1,
    chunk: int = CHUNK,
) -> PlanReport:
    """Run ``plan`` on ``trials`` independent streams and tally its success rate.

    A trial succeeds when it terminates and the goal's error event holds with
    respect to ``spec.exact_mean``; trials that hit the stage cap are failures.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials!r}")
    report = validate_plan(plan)
    if not report.ok:
        raise PlanValidationError(report)
    if spec.support != plan.support:
        raise DomainError(f"distribution support {spec.support} differs from plan support {plan.support}")
    mu = spec.exact_mean

    def run(bounds):
        t0, t1 = bounds
        stage, est, used = run_plan_batch(spec, plan, substream_keys(seed, range(t0, t1)))
        term = stage > 0
        ok = int(np.count_nonzero(plan.goal.achieved(est[term], mu)))
        hist = np.bincount(stage, minlength=plan.stage_cap + 1)
        return ok, int(used.sum()), hist

    results = _map(run, _chunks(trials, chunk), workers)
    hist = sum(r[2] for r in results)
    return PlanReport(
        trials=trials,
        successes=sum(r[0] for r in results),
        total_samples=sum(r[1] for r in results),
        stage_histogram={ell: int(c) for ell, c in enumerate(hist) if ell > 0 and c > 0},
        nonterminated=int(hist[0]),
        delta=plan.delta,
    )
