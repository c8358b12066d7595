import math

import numpy as np
import pytest

from oig_lab import bounds
from oig_lab.bounds import BoundParams, chernoff_lower_rhs, chernoff_upper_rhs, main_constant, risk_bound
from oig_lab.errors import InvalidArgument

# frozen from a 40-digit mpmath evaluation of the closed forms
UPPER_082_05_10 = 16.339201897419516
LOWER_078_05_10 = 15.681760429114341
LOWER_COEF_078 = 1.4401932375205532
COEF_M = 5.612155965946399
COEF_LOG = 4.803646404071055
BINARY_D1_N100 = 0.44849345434701196


def test_chernoff_upper():
    assert chernoff_upper_rhs(0.5, 1.0, 0) == 0
    assert chernoff_upper_rhs(0.82, 0.5, 10) == pytest.approx(UPPER_082_05_10, rel=1e-14)
    assert chernoff_upper_rhs(0.82, 0.2, 10) > chernoff_upper_rhs(0.82, 0.5, 10)


def test_chernoff_lower():
    assert chernoff_lower_rhs(0.5, 1.0, 0) == 0
    assert chernoff_lower_rhs(0.78, 0.5, 10) == pytest.approx(LOWER_078_05_10, rel=1e-14)
    assert bounds.lower_coefficient(0.78) == pytest.approx(LOWER_COEF_078, rel=1e-14)
    assert bounds.lower_coefficient(1e-9) == pytest.approx(1, abs=1e-8)
    assert chernoff_lower_rhs(0.78, 0.2, 10) > chernoff_lower_rhs(0.78, 0.5, 10)


def test_range_checks():
    with pytest.raises(InvalidArgument):
        chernoff_upper_rhs(1.5, 0.5, 1)
    with pytest.raises(InvalidArgument):
        chernoff_lower_rhs(0.5, 0, 1)
    with pytest.raises(InvalidArgument):
        BoundParams(3, 0.1)
    with pytest.raises(InvalidArgument):
        BoundParams(10, 1.0)


def test_main_constant():
    cm, cl = main_constant()
    assert cm == pytest.approx(COEF_M, rel=1e-14)
    assert cl == pytest.approx(COEF_LOG, rel=1e-14)
    assert round(cm, 2) == 5.61 and round(cl, 2) == 4.80
    assert bounds.constant() == cm
    a, b = main_constant(0.5, 0.5)
    assert math.isfinite(a) and math.isfinite(b)
    h = 1e-6
    assert (main_constant(0.82 + h)[0] - main_constant(0.82 - h)[0]) / (2 * h) > 0


def test_composed_matches_closed_form():
    cm, cl = main_constant()
    for n in (4, 16, 100, 1000):
        for delta in (0.01, 0.05, 0.1, 0.5):
            for m in (0.0, 1.0, 2.5, 7.0):
                direct = cm * m / n + cl * math.log(2 / delta) / n
                assert abs(bounds.composed_bound(n, delta, m) - direct) <= 1e-12


def test_harmonic_tail():
    t = np.arange(4, 10**6 + 1)
    sums = bounds.harmonic_tail_sums(10**6)
    assert len(sums) == len(t)
    assert sums.max() <= bounds.HARMONIC_TAIL
    # spot-check against exact summation
    for T in (4, 7, 100, 12345):
        exact = math.fsum(1 / i for i in range(T // 4 + 1, T + 1))
        assert sums[T - 4] == pytest.approx(exact, rel=1e-12)


def test_risk_bound_examples():
    c = bounds.constant()
    assert risk_bound("binary", BoundParams(100, 0.1, d=1)) == pytest.approx(BINARY_D1_N100, rel=1e-14)
    assert risk_bound("binary", BoundParams(100, 0.1, d=1)) == pytest.approx(2 * c * (1 / 100 + math.log(20) / 100))
    assert risk_bound("main", BoundParams(10**9, 0.1, m_n=1)) < 1e-7
    for g in (0.01, 0.1, 0.5):
        assert risk_bound("regression", BoundParams(50, 0.1, gamma=g, fat_v=2)) > g * c
    assert risk_bound("partial", BoundParams(64, 0.1, ceil_dens=1)) == risk_bound("multiclass", BoundParams(64, 0.1, ceil_dens=1))


def test_risk_bound_missing_extras():
    with pytest.raises(InvalidArgument):
        risk_bound("main", BoundParams(10, 0.1))
    with pytest.raises(InvalidArgument):
        risk_bound("regression", BoundParams(10, 0.1, gamma=0.1))
    with pytest.raises(InvalidArgument):
        risk_bound("partial", BoundParams(10, 0.1))
    with pytest.raises(InvalidArgument):
        risk_bound("agnostic", BoundParams(10, 0.1, d=1))


@pytest.mark.parametrize("setting, extra", [
    ("main", "m_n"), ("binary", "d"), ("multiclass", "ceil_dens"), ("partial", "ceil_dens"), ("regression", "fat_v"),
])
def test_monotonicity(setting, extra):
    base = dict(gamma=0.1, fat_v=2, d=2, ceil_dens=2, m_n=2.0)

    def value(n=64, delta=0.1, **kw):
        return risk_bound(setting, BoundParams(n, delta, **{**base, **kw}))

    ns = [8, 16, 64, 256]
    assert all(value(n=a) >= value(n=b) for a, b in zip(ns, ns[1:]))
    ds = [0.01, 0.05, 0.1, 0.5]
    assert all(value(delta=a) >= value(delta=b) for a, b in zip(ds, ds[1:]))
    assert value(**{extra: 1}) <= value(**{extra: 3})
    if setting == "regression":
        assert value(gamma=0.05) <= value(gamma=0.2)
