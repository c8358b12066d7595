"""Small named classes used by the experiments, the demo config and the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction

from .classes import BINARY, MULTICLASS, PARTIAL, REAL, STAR, HypothesisClass
from .errors import InvalidArgument


def thresholds(k: int) -> HypothesisClass:
    """x -> 1[x >= a] for a = 0..k. VC dimension 1."""
    return HypothesisClass(tuple(tuple(int(x >= a) for x in range(k)) for a in range(k + 1)), BINARY, k)


def intervals(k: int) -> HypothesisClass:
    """Indicators of discrete intervals [a, b), including the empty one. VC dimension 2."""
    rows = {tuple(int(a <= x < b) for x in range(k)) for a in range(k + 1) for b in range(a, k + 1)}
    return HypothesisClass(tuple(rows), BINARY, k)


def unions_of_two_intervals(k: int) -> HypothesisClass:
    """Unions of at most two intervals. VC dimension 4 once k >= 4."""
    ivs = [frozenset(range(a, b)) for a in range(k + 1) for b in range(a, k + 1)]
    rows = {tuple(int(x in (i | j)) for x in range(k)) for i in ivs for j in ivs}
    return HypothesisClass(tuple(rows), BINARY, k)


def cube(k: int) -> HypothesisClass:
    return HypothesisClass(tuple(itertools.product((0, 1), repeat=k)), BINARY, k)


def singletons(k: int) -> HypothesisClass:
    """All-zero plus the k point indicators. VC dimension 1."""
    rows = [tuple(0 for _ in range(k))] + [tuple(int(x == a) for x in range(k)) for a in range(k)]
    return HypothesisClass(tuple(rows), BINARY, k)


def gap_thresholds(k: int) -> HypothesisClass:
    """Partial thresholds: 0 left of a, * at a, 1 right of a; plus the two constants.

    The * at the switch point means no two points can show (1, 0), so the
    partial VC dimension is 1.
    """
    rows = [tuple(0 if x < a else (STAR if x == a else 1) for x in range(k)) for a in range(k)]
    rows += [tuple(0 for _ in range(k)), tuple(1 for _ in range(k))]
    return HypothesisClass(tuple(rows), PARTIAL, k)


def staircases(k: int, labels: int = 3) -> HypothesisClass:
    """Non-decreasing maps from k ordered points into {0, ..., labels-1}."""
    rows = [
        tuple(sum(int(x >= c) for c in cuts) for x in range(k))
        for cuts in itertools.combinations_with_replacement(range(k + 1), labels - 1)
    ]
    return HypothesisClass(tuple(rows), MULTICLASS, k)


def monotone(k: int, steps: int = 4, both: bool = True) -> HypothesisClass:
    """Monotone maps from k ordered points into {0, 1/steps, ..., 1}.

    With ``both`` the class holds the non-decreasing and the non-increasing
    maps, which is the discretized isotonic family with V_gamma dimension <= 2.
    """
    up = [
        tuple(Fraction(v, steps) for v in combo)
        for combo in itertools.combinations_with_replacement(range(steps + 1), k)
    ]
    rows = set(up)
    if both:
        rows |= {tuple(reversed(r)) for r in up}
    return HypothesisClass(tuple(rows), REAL, k)


def two_functions(k: int = 4) -> HypothesisClass:
    """Two far-apart real functions alternating between 0.1 and 0.9."""
    lo, hi = Fraction(1, 10), Fraction(9, 10)
    a = tuple(lo if x % 2 == 0 else hi for x in range(k))
    b = tuple(hi if x % 2 == 0 else lo for x in range(k))
    return HypothesisClass((a, b), REAL, k)


BUILTIN = {
    "thresholds": thresholds,
    "intervals": intervals,
    "unions2": unions_of_two_intervals,
    "cube": cube,
    "singletons": singletons,
    "gap-thresholds": gap_thresholds,
    "staircases": staircases,
    "monotone": monotone,
    "two-functions": two_functions,
}


def builtin_class(name: str, k: int) -> HypothesisClass:
    try:
        factory = BUILTIN[name]
    except KeyError:
        raise InvalidArgument(f"unknown built-in class {name!r}; expected one of {sorted(BUILTIN)}") from None
    return factory(k)
