import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from oig_lab.classes import BINARY, MULTICLASS, PARTIAL, REAL, STAR, HypothesisClass


def random_class(rng, k, rows, alphabet=BINARY, labels=2):
    if alphabet == REAL:
        vals = [Fraction(i, 4) for i in range(5)]
        data = {tuple(vals[i] for i in rng.integers(0, 5, k)) for _ in range(rows)}
    elif alphabet == PARTIAL:
        choices = (0, 1, STAR)
        data = {tuple(choices[i] for i in rng.integers(0, 3, k)) for _ in range(rows)}
    else:
        data = {tuple(int(v) for v in rng.integers(0, labels, k)) for _ in range(rows)}
    return HypothesisClass(tuple(data), alphabet, k)


@st.composite
def binary_classes(draw, max_k=5, max_rows=12):
    k = draw(st.integers(1, max_k))
    pats = list(itertools.product((0, 1), repeat=k))
    rows = draw(st.lists(st.sampled_from(pats), min_size=1, max_size=max_rows))
    return HypothesisClass(tuple(rows), BINARY, k)


@st.composite
def multiclass_classes(draw, max_k=4, max_rows=10, labels=3):
    k = draw(st.integers(1, max_k))
    row = st.tuples(*[st.integers(0, labels - 1)] * k)
    rows = draw(st.lists(row, min_size=1, max_size=max_rows))
    return HypothesisClass(tuple(rows), MULTICLASS, k)


@st.composite
def real_classes(draw, max_k=3, max_rows=6, steps=4):
    k = draw(st.integers(1, max_k))
    val = st.integers(0, steps).map(lambda i: Fraction(i, steps))
    rows = draw(st.lists(st.tuples(*[val] * k), min_size=1, max_size=max_rows))
    return HypothesisClass(tuple(rows), REAL, k)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
