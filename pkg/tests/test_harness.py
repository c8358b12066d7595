import math
from fractions import Fraction

import numpy as np
import pytest

from oig_lab.classes import BINARY, STAR, HypothesisClass, LabeledSample
from oig_lab.corpus import gap_thresholds, monotone, thresholds, two_functions
from oig_lab.errors import BudgetExceeded, InvalidArgument
from oig_lab.harness import (
    Capacity,
    FiniteDistribution,
    exact_expected_risk,
    exact_risk,
    loo_capacity,
    monte_carlo_expected_risk,
    run_pac_experiment,
    sample,
    slack,
    thread_count,
    verify_martingale_bounds,
)
from oig_lab.predictors import ABSOLUTE, SuffixMajority, OIGPredictor

F = Fraction


def test_distribution_validation():
    h = thresholds(3)
    with pytest.raises(InvalidArgument):
        FiniteDistribution(h, (0.5, 0.5), 0)
    with pytest.raises(InvalidArgument):
        FiniteDistribution(h, (0.5, 0.6, -0.1), 0)
    with pytest.raises(InvalidArgument):
        FiniteDistribution(h, (0.5, 0.25, 0.2), 0)
    with pytest.raises(InvalidArgument):
        FiniteDistribution(h, (0.5, 0.25, 0.25), 9)
    # the target may not abstain where the distribution puts mass
    g = gap_thresholds(3)
    t = next(i for i, r in enumerate(g.rows) if r[1] is STAR)
    with pytest.raises(InvalidArgument):
        FiniteDistribution.uniform(g, t)
    assert FiniteDistribution(g, (0.5, 0.0, 0.5), t).support == (0, 2)


def test_sample_point_mass_and_frequency():
    h = thresholds(3)
    d = FiniteDistribution(h, (0, 1, 0), 2)
    assert sample(d, 5, 0).entries == ((1, h.rows[2][1]),) * 5
    u = FiniteDistribution(thresholds(2), (0.5, 0.5), 1)
    n = 100_000
    freq = sum(p == 0 for p in sample(u, n, 11).points) / n
    assert abs(freq - 0.5) <= 3 * math.sqrt(0.25 / n)
    with pytest.raises(InvalidArgument):
        sample(u, 0, 1)


def test_sample_determinism():
    d = FiniteDistribution.uniform(thresholds(6), 3)
    assert sample(d, 50, [4, 2]) == sample(d, 50, [4, 2])
    assert sample(d, 50, [4, 2]) != sample(d, 50, [4, 3])


def test_exact_risk():
    h = thresholds(3)
    d = FiniteDistribution(h, (0.3, 0.3, 0.4), 1)
    target = dict(enumerate(h.rows[1]))
    assert exact_risk(target, d) == 0
    wrong = dict(target)
    wrong[0] = 1 - wrong[0]
    assert exact_risk(wrong, d) == pytest.approx(0.3)
    with pytest.raises(InvalidArgument):
        exact_risk({0: 0}, d)


def test_exact_risk_regression_cross_check(rng):
    h = monotone(4, 4)
    w = rng.dirichlet(np.ones(4))
    w[-1] = 1 - w[:-1].sum()
    d = FiniteDistribution(h, tuple(w), 7)
    preds = {x: F(int(rng.integers(0, 9)), 8) for x in range(4)}
    brute = sum(float(abs(preds[x] - h.rows[7][x])) * d.weights[x] for x in reversed(range(4)))
    assert exact_risk(preds, d, ABSOLUTE) == pytest.approx(brute, abs=1e-15)


def test_trivial_class_never_errs():
    h = HypothesisClass(((0, 1, 1, 0),), BINARY, 4)
    d = FiniteDistribution.uniform(h, 0)
    st = run_pac_experiment(h, d, 16, 0.1, 30, BINARY, seed=1)
    assert all(r.risk == 0 for r in st.records)
    assert st.violations == 0


def test_experiment_record_consistency():
    h = thresholds(6)
    d = FiniteDistribution.uniform(h, 3)
    st = run_pac_experiment(h, d, 12, 0.1, 20, BINARY, seed=5)
    qs = [st.quantiles[q] for q in sorted(st.quantiles)]
    assert qs == sorted(qs)
    assert st.violation_frequency == st.violations / st.trials
    agg = SuffixMajority(OIGPredictor(h))
    from oig_lab.harness import sample as draw

    for r in st.records[:5]:
        s = draw(d, 12, [5, 12, r.trial])
        assert r.risk == pytest.approx(exact_risk(agg.table(s, d.support), d))
        assert 0 <= r.risk <= 1
        assert len(r.prefix_risks) == 12 - 3


def test_experiment_is_reproducible_across_threads(monkeypatch):
    h = thresholds(6)
    d = FiniteDistribution.uniform(h, 2)
    a = run_pac_experiment(h, d, 8, 0.1, 12, BINARY, seed=9, threads=1)
    monkeypatch.setenv("OIG_LAB_THREADS", "3")
    b = run_pac_experiment(h, d, 8, 0.1, 12, BINARY, seed=9, threads=3)
    assert [r.risk for r in a.records] == [r.risk for r in b.records]
    assert [r.loo_total for r in a.records] == [r.loo_total for r in b.records]


def test_thread_count(monkeypatch):
    monkeypatch.delenv("OIG_LAB_THREADS", raising=False)
    assert thread_count() == 1 and thread_count(4) == 4
    monkeypatch.setenv("OIG_LAB_THREADS", "2")
    assert thread_count(4) == 2 and thread_count() == 2
    monkeypatch.setenv("OIG_LAB_THREADS", "zero")
    with pytest.raises(InvalidArgument):
        thread_count()


def test_experiment_argument_checks():
    h = thresholds(4)
    d = FiniteDistribution.uniform(h, 2)
    with pytest.raises(InvalidArgument):
        run_pac_experiment(h, d, 8, 0.1, 0, BINARY)
    with pytest.raises(InvalidArgument):
        run_pac_experiment(h, d, 8, 1.5, 3, BINARY)
    with pytest.raises(InvalidArgument):
        run_pac_experiment(h, d, 8, 0.1, 3, "regression", gamma=0.1)
    with pytest.raises(BudgetExceeded):
        run_pac_experiment(thresholds(12), FiniteDistribution.uniform(thresholds(12), 2), 8, 0.1, 3, BINARY)


def test_capacity():
    assert loo_capacity(thresholds(6), BINARY, 8) == Capacity(1.0, ceil_dens=1)
    cap = loo_capacity(two_functions(4), "regression", 10, F(1, 10))
    assert cap.fat_v == 1 and cap.m_n == pytest.approx(11 / 10 + 1)


def test_median_risk_halves_when_n_doubles():
    h = thresholds(32)
    d = FiniteDistribution.uniform(h, 16)
    cap = Capacity(1.0, ceil_dens=1)
    med = [run_pac_experiment(h, d, n, 0.1, 200, BINARY, seed=3, capacity=cap).median for n in (8, 16, 32)]
    for a, b in zip(med, med[1:]):
        assert 1.5 <= a / b <= 3


def test_regression_experiment_runs():
    h = two_functions(4)
    d = FiniteDistribution.uniform(h, 0)
    st = run_pac_experiment(h, d, 8, 0.1, 10, "regression", seed=2, gamma=F(1, 10))
    assert st.max_loo <= st.loo_cap
    assert st.violations == 0


def test_expected_risk_examples():
    h = HypothesisClass(((0, 1, 0),), BINARY, 3)
    assert exact_expected_risk(h, FiniteDistribution.uniform(h, 0), 3) == 0
    t = thresholds(3)
    d = FiniteDistribution.uniform(t, 1)
    v = exact_expected_risk(t, d, 3)
    assert 0 < v <= 1 / 4
    mc = monte_carlo_expected_risk(t, d, 3, 20_000, seed=4)
    assert abs(mc.mean - v) <= 4 * mc.stderr
    with pytest.raises(BudgetExceeded):
        exact_expected_risk(t, d, 20)


def test_expected_risk_matches_naive_sequence_enumeration():
    import itertools

    t = thresholds(3)
    d = FiniteDistribution(t, (0.2, 0.5, 0.3), 2)
    pred = OIGPredictor(t)
    total = 0.0
    for seq in itertools.product(range(3), repeat=3):
        s = LabeledSample(tuple((x, d.label(x)) for x in seq))
        p = math.prod(d.weights[x] for x in seq)
        total += p * exact_risk(pred.table(s), d)
    assert exact_expected_risk(t, d, 3) == pytest.approx(total, abs=1e-15)


@pytest.mark.parametrize("process", ["iid", "switching", "deterministic"])
def test_martingale_bounds(process):
    r = verify_martingale_bounds(process, delta=0.1, trials=4000, seed=1)
    assert r.upper_frequency <= 0.1 + slack(0.1, 4000)
    assert r.lower_frequency <= 0.1 + slack(0.1, 4000)
    if process == "deterministic":
        assert r.upper_violations == r.lower_violations == 0


def test_martingale_argument_checks():
    with pytest.raises(InvalidArgument):
        verify_martingale_bounds("iid", trials=0)
    with pytest.raises(InvalidArgument):
        verify_martingale_bounds("brownian")
