"""Finite-distribution simulation: sampling, exact risks and PAC experiments.

Risks are computed exactly from the distribution weights, so the only
randomness in an experiment is the draw of the training sample. Trial i of a
run uses ``numpy.random.default_rng([seed, n, i])``; results therefore do not
depend on how many worker threads execute the trials.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import bounds
from .classes import (
    BINARY,
    DEFAULT_BUDGET,
    MULTICLASS,
    PARTIAL,
    REAL,
    STAR,
    Budget,
    HypothesisClass,
    LabeledSample,
    as_fraction,
    check_gamma,
    v_gamma_dimension,
)
from .errors import BudgetExceeded, InvalidArgument
from .orientation import ceil_class_density
from .predictors import (
    ABSOLUTE,
    ZERO_ONE,
    OIGPredictor,
    PartialOIGPredictor,
    Predictor,
    RegressionPredictor,
    loss,
    plurality_vote,
    suffix_start,
)

SETTINGS = (BINARY, MULTICLASS, PARTIAL, "regression")
ENUMERATION_LIMIT = 10**6


def slack(delta: float, trials: int) -> float:
    """Three binomial standard deviations at rate delta."""
    return 3 * math.sqrt(delta * (1 - delta) / trials)


def thread_count(requested: int | None = None) -> int:
    """Worker threads: the request, capped by OIG_LAB_THREADS when that is set."""
    n = requested or 1
    env = os.environ.get("OIG_LAB_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise InvalidArgument(f"OIG_LAB_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise InvalidArgument("OIG_LAB_THREADS must be at least 1")
        n = min(n, cap) if requested else cap
    return max(n, 1)


@dataclass(frozen=True)
class FiniteDistribution:
    """Weights on the domain points plus a target row f* that labels every draw."""

    cls: HypothesisClass
    weights: tuple[float, ...]
    target: int

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) != self.cls.domain_size:
            raise InvalidArgument(f"expected {self.cls.domain_size} weights, got {len(w)}")
        if any(v < 0 or not math.isfinite(v) for v in w):
            raise InvalidArgument("weights must be finite and non-negative")
        if abs(sum(w) - 1) > 1e-12:
            raise InvalidArgument(f"weights must sum to 1, got {sum(w)!r}")
        if not 0 <= self.target < len(self.cls):
            raise InvalidArgument(f"target row {self.target} does not exist")
        object.__setattr__(self, "weights", w)
        for x in self.support:
            if self.label(x) is STAR:
                raise InvalidArgument(f"target abstains at point {x}, which has positive weight")

    @classmethod
    def uniform(cls, hc: HypothesisClass, target: int, points: Sequence[int] | None = None):
        pts = range(hc.domain_size) if points is None else points
        pts = sorted(set(pts))
        w = [0.0] * hc.domain_size
        for p in pts:
            w[p] = 1 / len(pts)
        # absorb rounding so the sum is 1 to within one ulp
        w[pts[-1]] = 1 - sum(w[p] for p in pts[:-1])
        return cls(hc, tuple(w), target)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(x for x, v in enumerate(self.weights) if v > 0)

    @property
    def target_row(self) -> tuple:
        return self.cls.rows[self.target]

    def label(self, x: int):
        return self.cls.rows[self.target][x]


def sample(dist: FiniteDistribution, n: int, seed) -> LabeledSample:
    """n i.i.d. points labeled by the target; ``seed`` is anything default_rng accepts."""
    if n < 1:
        raise InvalidArgument("sample size must be at least 1")
    rng = np.random.default_rng(seed)
    sup = dist.support
    p = np.array([dist.weights[x] for x in sup])
    idx = rng.choice(len(sup), size=n, p=p / p.sum())
    return LabeledSample(tuple((sup[i], dist.label(sup[i])) for i in idx))


def exact_risk(predictions: dict, dist: FiniteDistribution, loss_id: str = ZERO_ONE) -> float:
    """sum_x w(x) * loss(prediction(x), f*(x)) over the support."""
    total = 0.0
    for x in dist.support:
        if x not in predictions:
            raise InvalidArgument(f"no prediction for support point {x}")
        total += dist.weights[x] * float(loss(loss_id, predictions[x], dist.label(x)))
    return total


def base_predictor(cls: HypothesisClass, setting: str, gamma=None) -> Predictor:
    """The one-inclusion predictor that the suffix aggregate runs on prefixes."""
    if setting in (BINARY, MULTICLASS):
        return OIGPredictor(cls)
    if setting == PARTIAL:
        return PartialOIGPredictor(cls)
    if setting == "regression":
        if gamma is None:
            raise InvalidArgument("the regression setting needs gamma")
        return RegressionPredictor(cls, gamma)
    raise InvalidArgument(f"unknown setting {setting!r}; expected one of {SETTINGS}")


def setting_loss(setting: str) -> str:
    return ABSOLUTE if setting == "regression" else ZERO_ONE


def check_setting(cls: HypothesisClass, setting: str) -> None:
    allowed = {
        BINARY: (BINARY,),
        MULTICLASS: (BINARY, MULTICLASS),
        PARTIAL: (BINARY, PARTIAL),
        "regression": (REAL,),
    }
    if setting not in allowed:
        raise InvalidArgument(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    if cls.alphabet not in allowed[setting]:
        raise InvalidArgument(f"a {cls.alphabet} class does not fit the {setting} setting")


@dataclass(frozen=True)
class Capacity:
    """The LOO cap M_n behind the bounds, with the pieces it was built from."""

    m_n: float
    ceil_dens: int | None = None
    fat_v: int | None = None


def loo_capacity(cls: HypothesisClass, setting: str, n: int, gamma=None, budget: Budget = DEFAULT_BUDGET) -> Capacity:
    """ceil(dens_n) for classification; (n+1) gamma + fat^V(gamma) for regression."""
    check_setting(cls, setting)
    if setting == "regression":
        g = check_gamma(gamma)
        fv = v_gamma_dimension(cls, g, budget).value
        return Capacity(float((n + 1) * g + fv), fat_v=fv)
    cd = ceil_class_density(cls, n, budget, prune_star=setting == PARTIAL)
    return Capacity(float(cd), ceil_dens=cd)


def setting_bound(setting: str, n: int, delta: float, cap: Capacity, gamma=None, lam=bounds.LAMBDA, eta=bounds.ETA) -> float:
    if setting == "regression":
        p = bounds.BoundParams(n, delta, lam, eta, gamma=float(gamma), fat_v=cap.fat_v)
        return bounds.risk_bound("regression", p)
    p = bounds.BoundParams(n, delta, lam, eta, ceil_dens=cap.ceil_dens)
    return bounds.risk_bound("partial" if setting == PARTIAL else "multiclass", p)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    n: int
    risk: float
    prefix_risks: tuple[float, ...]  # prefixes t = ceil(n/4) .. n-1
    next_losses: tuple[float, ...]  # loss of prefix t's predictor on point t+1
    loo_total: float
    forward_ok: bool
    reverse_ok: bool
    wall_time: float = field(default=0.0, compare=False)

    @property
    def suffix_risk_sum(self) -> float:
        return math.fsum(self.prefix_risks)

    @property
    def suffix_loss_sum(self) -> float:
        return math.fsum(self.next_losses)


@dataclass(frozen=True)
class ExperimentStats:
    setting: str
    n: int
    delta: float
    trials: int
    bound: float
    m_n: float
    quantiles: dict  # level -> empirical quantile of the aggregate risk
    violations: int
    forward_violations: int
    reverse_violations: int
    max_loo: float
    loo_cap: float
    records: tuple[TrialRecord, ...] = ()

    @property
    def violation_frequency(self) -> float:
        return self.violations / self.trials

    @property
    def forward_frequency(self) -> float:
        return self.forward_violations / self.trials

    @property
    def reverse_frequency(self) -> float:
        return self.reverse_violations / self.trials

    @property
    def tolerance(self) -> float:
        return self.delta + slack(self.delta, self.trials)

    @property
    def quantile(self) -> float:
        """The empirical (1 - delta)-quantile of the aggregate risk."""
        return self.quantiles[1 - self.delta]

    @property
    def median(self) -> float:
        return self.quantiles[0.5]


def run_trial(
    base: Predictor,
    dist: FiniteDistribution,
    n: int,
    delta: float,
    m_n: float,
    seed,
    trial: int,
    lam: float = bounds.LAMBDA,
    eta: float = bounds.ETA,
) -> TrialRecord:
    """One draw of S and the exact risks of its prefix predictors and suffix aggregate."""
    if n < 4:
        raise InvalidArgument("suffix aggregation needs n >= 4")
    started = time.perf_counter()
    s = sample(dist, n, [*_seed_words(seed), n, trial])
    regression = isinstance(base, RegressionPredictor)
    loss_id = setting_loss("regression" if regression else BINARY)
    sup = dist.support
    tables, prefix_risks, next_losses = [], [], []
    for t in range(suffix_start(n), n):
        table = base.table(s.prefix(t), sup)
        tables.append(table)
        prefix_risks.append(exact_risk(table, dist, loss_id))
        x, y = s.entries[t]
        next_losses.append(float(loss(loss_id, table[x], y)))
    if regression:
        agg = {x: sum((tb[x] for tb in tables), Fraction(0)) / len(tables) for x in sup}
    else:
        agg = {x: plurality_vote(tb[x] for tb in tables) for x in sup}
    risk = exact_risk(agg, dist, loss_id)
    loo = math.fsum(
        float(loss(loss_id, base.predict(s.without(i), p), y)) for i, (p, y) in enumerate(s.entries)
    )
    forward_ok = math.fsum(prefix_risks) <= bounds.forward_rhs(eta, delta, math.fsum(next_losses))
    reverse_ok = math.fsum(next_losses) <= bounds.reverse_rhs(lam, delta, m_n)
    return TrialRecord(
        trial,
        n,
        risk,
        tuple(prefix_risks),
        tuple(next_losses),
        loo,
        forward_ok,
        reverse_ok,
        time.perf_counter() - started,
    )


def _seed_words(seed) -> list[int]:
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


def quantile_levels(delta: float) -> tuple[float, ...]:
    return tuple(sorted({0.5, 0.9, 1 - delta, 1.0}))


def run_pac_experiment(
    cls: HypothesisClass,
    dist: FiniteDistribution,
    n: int,
    delta: float,
    trials: int,
    setting: str,
    seed: int = 0,
    gamma=None,
    budget: Budget = DEFAULT_BUDGET,
    threads: int | None = None,
    lam: float = bounds.LAMBDA,
    eta: float = bounds.ETA,
    capacity: Capacity | None = None,
) -> ExperimentStats:
    """Repeat: draw S ~ P^n, score the suffix aggregate exactly, compare with the bound."""
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    if not 0 < delta < 1:
        raise InvalidArgument("delta must lie in (0, 1)")
    if dist.cls != cls:
        raise InvalidArgument("the distribution's class differs from the experiment class")
    check_setting(cls, setting)
    if setting == "regression":
        gamma = check_gamma(gamma)
    cap = capacity or loo_capacity(cls, setting, n, gamma, budget)
    bound = setting_bound(setting, n, delta, cap, gamma, lam, eta)
    base = base_predictor(cls, setting, gamma)
    # LOO of a size-n sample trains on n-1 points, so the cap is the one for size n
    loo_cap = cap.m_n

    def work(i):
        return run_trial(base, dist, n, delta, cap.m_n, seed, i, lam, eta)

    workers = thread_count(threads)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(work, range(trials)))
    else:
        records = [work(i) for i in range(trials)]
    risks = np.array(sorted(r.risk for r in records))
    levels = quantile_levels(delta)
    quantiles = {q: float(np.quantile(risks, q, method="inverted_cdf")) for q in levels}
    return ExperimentStats(
        setting=setting,
        n=n,
        delta=delta,
        trials=trials,
        bound=bound,
        m_n=cap.m_n,
        quantiles=quantiles,
        violations=sum(r.risk > bound for r in records),
        forward_violations=sum(not r.forward_ok for r in records),
        reverse_violations=sum(not r.reverse_ok for r in records),
        max_loo=max(r.loo_total for r in records),
        loo_cap=loo_cap,
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# expected risk


def _risk_of_sample(pred: Predictor, dist: FiniteDistribution, entries: tuple, loss_id: str) -> float:
    return exact_risk(pred.table(LabeledSample(entries), dist.support), dist, loss_id)


def exact_expected_risk(
    cls: HypothesisClass,
    dist: FiniteDistribution,
    n: int,
    setting: str = BINARY,
    gamma=None,
    limit: int = ENUMERATION_LIMIT,
) -> float:
    """E_{S ~ P^n} of the base predictor's risk, by enumerating every sequence in support^n."""
    if n < 1:
        raise InvalidArgument("sample size must be at least 1")
    check_setting(cls, setting)
    sup = dist.support
    if len(sup) ** n > limit:
        raise BudgetExceeded(f"{len(sup)}^{n} samples exceed the enumeration limit {limit}")
    pred = base_predictor(cls, setting, gamma)
    loss_id = setting_loss(setting)
    # the risk only depends on the multiset, so enumerate multisets with their multinomial weight
    total = 0.0
    for combo in itertools.combinations_with_replacement(sup, n):
        counts = {x: combo.count(x) for x in set(combo)}
        ways = math.factorial(n)
        prob = 1.0
        for x, c in counts.items():
            ways //= math.factorial(c)
            prob *= dist.weights[x] ** c
        entries = tuple((x, dist.label(x)) for x in combo)
        total += ways * prob * _risk_of_sample(pred, dist, entries, loss_id)
    return total


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    trials: int


def monte_carlo_expected_risk(
    cls: HypothesisClass,
    dist: FiniteDistribution,
    n: int,
    trials: int,
    seed: int = 0,
    setting: str = BINARY,
    gamma=None,
) -> MonteCarloEstimate:
    """Sample-mean estimate of the expected risk from ``trials`` independent samples."""
    if trials < 2:
        raise InvalidArgument("Monte Carlo needs at least 2 trials")
    check_setting(cls, setting)
    rng = np.random.default_rng([seed, n])
    sup = dist.support
    p = np.array([dist.weights[x] for x in sup])
    draws = rng.choice(len(sup), size=(trials, n), p=p / p.sum())
    pred = base_predictor(cls, setting, gamma)
    loss_id = setting_loss(setting)
    # repeated samples share their risk; score each distinct sequence once
    uniq, inverse = np.unique(draws, axis=0, return_inverse=True)
    risks = np.array(
        [_risk_of_sample(pred, dist, tuple((sup[i], dist.label(sup[i])) for i in row), loss_id) for row in uniq]
    )
    per_trial = risks[inverse.reshape(-1)]
    return MonteCarloEstimate(float(per_trial.mean()), float(per_trial.std(ddof=1) / math.sqrt(trials)), trials)


# ---------------------------------------------------------------------------
# martingale inequalities

PROCESSES = ("iid", "switching", "deterministic")


@dataclass(frozen=True)
class MartingaleReport:
    process: str
    delta: float
    trials: int
    steps: int
    upper_violations: int
    lower_violations: int

    @property
    def upper_frequency(self) -> float:
        return self.upper_violations / self.trials

    @property
    def lower_frequency(self) -> float:
        return self.lower_violations / self.trials

    @property
    def tolerance(self) -> float:
        return self.delta + slack(self.delta, self.trials)

    @property
    def ok(self) -> bool:
        return max(self.upper_frequency, self.lower_frequency) <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "process": self.process,
            "delta": self.delta,
            "trials": self.trials,
            "steps": self.steps,
            "upper_violations": self.upper_violations,
            "lower_violations": self.lower_violations,
            "upper_frequency": self.upper_frequency,
            "lower_frequency": self.lower_frequency,
            "tolerance": self.tolerance,
        }


def simulate_process(process: str, trials: int, steps: int, rng: np.random.Generator, p: float = 0.3):
    """Per-trial sums of W_t and of E[W_t | past] for one of the built-in process families.

    ``iid``: Bernoulli(p). ``switching``: the next mean is 0.9 after a 1 and
    0.05 after a 0, so it depends on the history. ``deterministic``: W_t = 0.
    """
    if process == "deterministic":
        z = np.zeros(trials)
        return z, z.copy()
    if process not in PROCESSES:
        raise InvalidArgument(f"unknown process {process!r}; expected one of {PROCESSES}")
    sum_w = np.zeros(trials)
    sum_e = np.zeros(trials)
    mean = np.full(trials, p)
    for _ in range(steps):
        w = (rng.random(trials) < mean).astype(float)
        sum_w += w
        sum_e += mean
        if process == "switching":
            mean = np.where(w == 1, 0.9, 0.05)
    return sum_w, sum_e


def verify_martingale_bounds(
    process: str,
    lam: float = bounds.LAMBDA,
    eta: float = bounds.ETA,
    delta: float = 0.1,
    trials: int = 10_000,
    seed: int = 0,
    steps: int = 50,
    p: float = 0.3,
) -> MartingaleReport:
    """Count how often each tail inequality for bounded adapted processes fails."""
    if trials < 1 or steps < 1:
        raise InvalidArgument("trials and steps must be positive")
    if not 0 <= p <= 1:
        raise InvalidArgument("p must lie in [0, 1]")
    rng = np.random.default_rng([seed, PROCESSES.index(process) if process in PROCESSES else 0])
    sum_w, sum_e = simulate_process(process, trials, steps, rng, p)
    upper = sum_w >= bounds.chernoff_upper_rhs(lam, delta, 0) + bounds.upper_coefficient(lam) * sum_e
    lower = sum_e >= bounds.chernoff_lower_rhs(eta, delta, 0) + bounds.lower_coefficient(eta) * sum_w
    return MartingaleReport(process, delta, trials, steps, int(upper.sum()), int(lower.sum()))
