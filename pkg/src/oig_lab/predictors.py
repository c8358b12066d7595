"""One-inclusion predictors, their suffix aggregations, and leave-one-out audits.

Every base predictor here depends on its training sample only through the
set of distinct labeled points (the regression predictor also uses the sample
size), so reordering the sample never changes a prediction. The suffix
aggregators are the exception by construction: they look at prefixes.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .classes import (
    BINARY,
    MULTICLASS,
    PARTIAL,
    REAL,
    STAR,
    HypothesisClass,
    LabeledSample,
    apply_threshold,
    as_fraction,
    check_gamma,
    check_realizable,
    project,
    threshold_value,
)
from .errors import InvalidArgument, RealizabilityError
from .hypergraph import build_oig, star_free
from .orientation import min_out_degree_orientation

ZERO_ONE = "zero_one"
ABSOLUTE = "absolute"
ELL_B = "ell_b"
LOSSES = (ZERO_ONE, ABSOLUTE, ELL_B)

_CACHE_LIMIT = 500_000


def loss(loss_id: str, predicted, actual):
    if loss_id == ZERO_ONE:
        return int(predicted != actual)
    if loss_id == ELL_B:
        return int(predicted != actual and actual is not STAR)
    if loss_id == ABSOLUTE:
        return abs(predicted - actual)
    raise InvalidArgument(f"unknown loss {loss_id!r}")


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _labels_by_point(cls: HypothesisClass, sample: LabeledSample) -> dict:
    sample.validate(cls)
    labeled = {}
    for p, y in sample.as_set():
        if p in labeled and labeled[p] != y:
            raise RealizabilityError(f"point {p} carries two different labels")
        labeled[p] = y
    return labeled


def plurality_vote(labels: Iterable):
    """Most frequent label; ties go to the smallest label."""
    counts = Counter(labels)
    if not counts:
        raise InvalidArgument("plurality vote of an empty multiset")
    top = max(counts.values())
    return min(y for y, c in counts.items() if c == top)


class Predictor:
    """Base class. Subclasses implement ``_predict`` and ``_key``."""

    variant = ""
    default_loss = ZERO_ONE

    def __init__(self, cls: HypothesisClass):
        self.cls = cls
        self._cache: dict = {}

    def _key(self, sample: LabeledSample):
        return sample.as_set()

    def predict(self, sample: LabeledSample, x: int):
        if not 0 <= x < self.cls.domain_size:
            raise InvalidArgument(f"test point {x} outside domain of size {self.cls.domain_size}")
        key = (self._key(sample), x)
        hit = self._cache.get(key, _MISSING)
        if hit is _MISSING:
            hit = self._predict(sample, x)
            if len(self._cache) > _CACHE_LIMIT:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    __call__ = predict

    def table(self, sample: LabeledSample, points: Sequence[int] | None = None) -> dict:
        pts = range(self.cls.domain_size) if points is None else points
        return {x: self.predict(sample, x) for x in pts}

    def _predict(self, sample, x):  # pragma: no cover - abstract
        raise NotImplementedError


_MISSING = object()


class _OrientedPredictor(Predictor):
    """Shared machinery: canonical min-out-degree orientation of G(H|_W).

    The orientation depends only on the projected class, so it is cached by
    the projected rows; point sets with the same projection share it.
    """

    prune_star = False

    def __init__(self, cls):
        super().__init__(cls)
        self._oriented: dict = {}

    def oriented(self, points: frozenset):
        """(points, hypergraph over columns 0..|W|-1, orientation) for the point set W."""
        pts = tuple(sorted(points))
        proj = project(self.cls, pts)
        if self.prune_star:
            proj = star_free(proj)
            if proj is None:
                raise RealizabilityError("every hypothesis abstains on the sample points")
        hit = self._oriented.get(proj.rows)
        if hit is None:
            g = build_oig(proj)
            hit = (g, min_out_degree_orientation(g)[1])
            if len(self._oriented) > _CACHE_LIMIT:
                self._oriented.clear()
            self._oriented[proj.rows] = hit
        return (pts, *hit)

    def _head_label(self, labeled: dict, x: int):
        pts, g, o = self.oriented(frozenset(labeled) | {x})
        i = pts.index(x)
        context = tuple(labeled[p] for p in pts if p != x)
        k = g.edge_index[(i, context)]
        return g.vertices[o.head[k]][i]


class OIGPredictor(_OrientedPredictor):
    """One-inclusion hypergraph predictor for binary and multiclass classes."""

    variant = "oig"

    def __init__(self, cls: HypothesisClass):
        if cls.alphabet not in (BINARY, MULTICLASS):
            raise InvalidArgument("the one-inclusion predictor needs a binary or multiclass class")
        super().__init__(cls)

    def _predict(self, sample, x):
        labeled = _labels_by_point(self.cls, sample)
        mask = check_realizable(self.cls, labeled.items())
        if x in labeled:
            return labeled[x]
        options = {self.cls.rows[k][x] for k in _bits(mask)}
        if len(options) == 1:
            return options.pop()
        return self._head_label(labeled, x)


class PartialOIGPredictor(_OrientedPredictor):
    """One-inclusion predictor on the *-free part of a partial class.

    Rows showing * anywhere on the sample points or the test point are
    removed before orienting, which leaves an ordinary graph.
    """

    variant = "partial"
    prune_star = True

    def __init__(self, cls: HypothesisClass):
        if cls.alphabet not in (BINARY, PARTIAL):
            raise InvalidArgument("the partial predictor needs a partial or binary class")
        super().__init__(cls)

    def _predict(self, sample, x):
        labeled = _labels_by_point(self.cls, sample)
        if any(y not in (0, 1) for y in labeled.values()):
            raise InvalidArgument("partial-class samples carry labels in {0, 1}")
        mask = check_realizable(self.cls, labeled.items())
        if x in labeled:
            return labeled[x]
        options = {self.cls.rows[k][x] for k in _bits(mask)} - {STAR}
        if not options:
            return 0  # every consistent row abstains at x
        if len(options) == 1:
            return options.pop()
        return self._head_label(labeled, x)


class RegressionPredictor(Predictor):
    """Staircase of partial one-inclusion predictors over thresholded copies of a real class.

    With m = ceil(4(|S|+1)/gamma) levels tau_i = i/m, the prediction is
    (1/m) * #{i : partial predictor for psi_{gamma,tau_i}(H) says 1 at x}.
    Thresholded classes only change where tau crosses v -/+ gamma for a
    label value v, so levels are grouped and each group is evaluated once.
    """

    variant = "regression"
    default_loss = ABSOLUTE

    def __init__(self, cls: HypothesisClass, gamma):
        if cls.alphabet != REAL:
            raise InvalidArgument("the regression predictor needs a real-valued class")
        super().__init__(cls)
        self.gamma = check_gamma(gamma)
        self._breaks = tuple(
            sorted({v - self.gamma for v in cls.label_values} | {v + self.gamma for v in cls.label_values})
        )
        self._groups: dict = {}
        self._partials: dict = {}

    def levels(self, n: int) -> int:
        """Number of thresholds m used for a training sample of size n."""
        return math.ceil(Fraction(4 * (n + 1)) / self.gamma)

    def _key(self, sample):
        return (sample.as_set(), len(sample))

    def level_groups(self, m: int) -> list[tuple[Fraction, int]]:
        """(representative tau, number of levels) for each run of equivalent levels."""
        hit = self._groups.get(m)
        if hit is None:
            # the signature of i/m can only change at the first level reaching a break or just past it
            starts = {1}
            for b in self._breaks:
                lo = math.floor(b * m)
                starts.update(i for i in (lo, lo + 1) if 1 <= i <= m)
            starts = sorted(starts)
            hit, last = [], None
            for i, nxt in zip(starts, starts[1:] + [m + 1]):
                tau = Fraction(i, m)
                sig = (bisect_left(self._breaks, tau), bisect_right(self._breaks, tau))
                if sig == last:
                    hit[-1][1] += nxt - i
                else:
                    hit.append([tau, nxt - i])
                    last = sig
            hit = [tuple(h) for h in hit]
            self._groups[m] = hit
        return hit

    def partial_for(self, tau: Fraction) -> PartialOIGPredictor:
        sig = (bisect_left(self._breaks, tau), bisect_right(self._breaks, tau))
        hit = self._partials.get(sig)
        if hit is None:
            hit = PartialOIGPredictor(apply_threshold(self.cls, self.gamma, tau))
            self._partials[sig] = hit
        return hit

    def _predict(self, sample, x):
        labeled = _labels_by_point(self.cls, sample)
        check_realizable(self.cls, labeled.items())
        m = self.levels(len(sample))
        ones = 0
        for tau, count in self.level_groups(m):
            entries = []
            for p, y in labeled.items():
                z = threshold_value(y, self.gamma, tau)
                if z is not STAR:
                    entries.append((p, z))
            g = self.partial_for(tau)
            if g.predict(LabeledSample(tuple(sorted(entries))), x) == 1:
                ones += count
        return Fraction(ones, m)


class ERMRegression(Predictor):
    """Empirical absolute-loss minimizer over the rows; ties go to the first canonical row."""

    variant = "erm"
    default_loss = ABSOLUTE

    def __init__(self, cls: HypothesisClass):
        if cls.alphabet != REAL:
            raise InvalidArgument("ERM regression needs a real-valued class")
        super().__init__(cls)

    def _key(self, sample):
        return tuple(sorted(sample.entries))

    def fit(self, sample: LabeledSample) -> int:
        if len(sample) == 0:
            raise InvalidArgument("ERM needs a nonempty sample")
        sample.validate(self.cls)
        ys = [(p, as_fraction(y)) for p, y in sample.entries]
        losses = [sum(abs(r[p] - y) for p, y in ys) for r in self.cls.rows]
        return min(range(len(losses)), key=lambda k: (losses[k], k))

    def _predict(self, sample, x):
        return self.cls.rows[self.fit(sample)][x]


def suffix_start(n: int) -> int:
    """First prefix length used by the suffix aggregators: ceil(n/4)."""
    return -(-n // 4)


class SuffixMajority(Predictor):
    """Plurality vote of the base predictor trained on prefixes t = ceil(n/4) .. n-1."""

    variant = "suffix-majority"

    def __init__(self, base: Predictor):
        super().__init__(base.cls)
        self.base = base
        self.default_loss = base.default_loss

    def _key(self, sample):
        return sample.entries

    def votes(self, sample: LabeledSample, x: int) -> list:
        n = len(sample)
        if n < 4:
            raise InvalidArgument("suffix aggregation needs at least 4 training points")
        return [self.base.predict(sample.prefix(t), x) for t in range(suffix_start(n), n)]

    def _predict(self, sample, x):
        return plurality_vote(self.votes(sample, x))


class SuffixAverage(SuffixMajority):
    """Uniform average of the base predictor over prefixes t = ceil(n/4) .. n-1."""

    variant = "suffix-average"

    def _predict(self, sample, x):
        votes = self.votes(sample, x)
        return sum(votes, Fraction(0)) / len(votes)


VARIANTS = ("oig", "partial", "regression", "suffix-majority", "suffix-average", "erm")


def make_predictor(cls: HypothesisClass, variant: str, gamma=None) -> Predictor:
    """Build a predictor by name. The suffix variants wrap the natural base for the class."""
    if variant == "oig":
        return OIGPredictor(cls)
    if variant == "partial":
        return PartialOIGPredictor(cls)
    if variant == "regression":
        if gamma is None:
            raise InvalidArgument("the regression predictor needs gamma")
        return RegressionPredictor(cls, gamma)
    if variant == "erm":
        return ERMRegression(cls)
    if variant == "suffix-majority":
        base = PartialOIGPredictor(cls) if cls.alphabet == PARTIAL else OIGPredictor(cls)
        return SuffixMajority(base)
    if variant == "suffix-average":
        if gamma is None:
            raise InvalidArgument("the suffix average needs gamma")
        return SuffixAverage(RegressionPredictor(cls, gamma))
    raise InvalidArgument(f"unknown predictor variant {variant!r}")


@lru_cache(maxsize=64)
def _shared(cls: HypothesisClass, variant: str, gamma) -> Predictor:
    return make_predictor(cls, variant, gamma)


def oig_predict(cls: HypothesisClass, sample: LabeledSample, x: int):
    return _shared(cls, "oig", None).predict(sample, x)


def partial_oig_predict(cls: HypothesisClass, sample: LabeledSample, x: int):
    return _shared(cls, "partial", None).predict(sample, x)


def regression_predict(cls: HypothesisClass, gamma, sample: LabeledSample, x: int) -> Fraction:
    return _shared(cls, "regression", check_gamma(gamma)).predict(sample, x)


def suffix_majority_predict(cls: HypothesisClass, sample: LabeledSample, x: int):
    return _shared(cls, "suffix-majority", None).predict(sample, x)


def suffix_average_predict(cls: HypothesisClass, gamma, sample: LabeledSample, x: int) -> Fraction:
    return _shared(cls, "suffix-average", check_gamma(gamma)).predict(sample, x)


def erm_regression(cls: HypothesisClass, sample: LabeledSample) -> int:
    return _shared(cls, "erm", None).fit(sample)


@dataclass(frozen=True)
class LooAudit:
    losses: tuple
    total: object
    bound: object = None

    @property
    def within_bound(self) -> bool | None:
        return None if self.bound is None else self.total <= self.bound


def loo_audit(predictor: Predictor, sample: LabeledSample, loss_id: str | None = None, bound=None) -> LooAudit:
    """Sum over i of loss(f(x_i; S without i), y_i)."""
    loss_id = loss_id or predictor.default_loss
    losses = tuple(
        loss(loss_id, predictor.predict(sample.without(i), p), y)
        for i, (p, y) in enumerate(sample.entries)
    )
    return LooAudit(losses, sum(losses), bound)
