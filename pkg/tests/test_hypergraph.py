import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import binary_classes, random_class
from oig_lab.classes import BINARY, MULTICLASS, PARTIAL, REAL, STAR, Budget, HypothesisClass, vc_dimension
from oig_lab.corpus import cube, gap_thresholds, intervals, thresholds
from oig_lab.errors import BudgetExceeded, InvalidArgument
from oig_lab.hypergraph import (
    OneInclusionHypergraph,
    avg_degree,
    build_oig,
    class_density,
    densest_projection,
    density,
    max_density,
    projected_graph,
    star_free,
)

F = Fraction


def square():
    return build_oig(cube(2))


def mu_oracle(g):
    """Induced density with set-of-edges semantics, every nonempty subset."""
    best = F(0)
    for r in range(1, g.num_vertices + 1):
        for u in itertools.combinations(range(g.num_vertices), r):
            us = set(u)
            induced = {frozenset(us & set(e.members)) for e in g.edges} - {frozenset()}
            best = max(best, F(sum(len(e) - 1 for e in induced), r))
    return best


def test_build_examples():
    g = square()
    assert g.num_vertices == 4
    assert len(g.edges) == 4 and all(len(e) == 2 for e in g.edges)
    one = build_oig(HypothesisClass(((0, 1, 0),), BINARY, 3))
    assert one.num_vertices == 1 and len(one.edges) == 3 and all(len(e) == 1 for e in one.edges)
    three = build_oig(HypothesisClass(((0,), (1,), (2,)), MULTICLASS, 1))
    assert three.num_vertices == 3 and [e.members for e in three.edges] == [(0, 1, 2)]
    with pytest.raises(InvalidArgument):
        build_oig(HypothesisClass(((F(1, 2),),), REAL, 1))


@settings(max_examples=60)
@given(binary_classes())
def test_edge_invariants(h):
    g = build_oig(h)
    tags = set()
    for e in g.edges:
        assert e.members
        assert (e.coordinate, e.context) not in tags
        tags.add((e.coordinate, e.context))
        i = e.coordinate
        for v in e.members:
            row = g.vertices[v]
            assert row[:i] + row[i + 1 :] == e.context
    # every vertex sits in exactly one edge per coordinate
    for v in range(g.num_vertices):
        assert sum(v in e.members for e in g.edges) == h.domain_size


def test_density_examples():
    assert density(square()) == 1
    tri = OneInclusionHypergraph.from_edges(3, [[0, 1, 2]])
    assert density(tri) == F(2, 3)
    assert density(build_oig(HypothesisClass(((0, 0),), BINARY, 2))) == 0
    with pytest.raises(InvalidArgument):
        density(square(), [])


def test_max_density_examples():
    assert max_density(square()).mu == 1
    star = OneInclusionHypergraph.from_edges(4, [[0, 1], [0, 2], [0, 3]])
    assert max_density(star).mu == F(3, 4)
    k4 = OneInclusionHypergraph.from_edges(4, itertools.combinations(range(4), 2))
    assert max_density(k4).mu == F(3, 2)


def test_avg_degree_examples():
    assert avg_degree(square()) == 2
    assert avg_degree(build_oig(HypothesisClass(((0, 0),), BINARY, 2))) == 0
    assert avg_degree(OneInclusionHypergraph.from_edges(3, [[0, 1, 2]])) == 1


def test_max_density_budget():
    g = OneInclusionHypergraph.from_edges(21, [[i, i + 1] for i in range(20)])
    with pytest.raises(BudgetExceeded):
        max_density(g)


def test_density_report_invariants(rng):
    for _ in range(60):
        k = int(rng.integers(1, 5))
        multi = rng.random() < 0.3
        h = random_class(rng, k, int(rng.integers(1, 12)), MULTICLASS if multi else BINARY, 3 if multi else 2)
        g = build_oig(h)
        rep = max_density(g)
        assert rep.dens <= rep.mu <= max(g.degrees, default=0)
        assert density(g, rep.witness_subset) == rep.mu
        assert rep.mu == mu_oracle(g)
        if all(len(e) > 1 for e in g.edges):
            assert rep.avgdeg <= 2 * rep.dens <= 2 * rep.avgdeg


def test_class_density_examples():
    for n in (1, 3, 6):
        assert class_density(thresholds(6), n) <= 1
    for d in (1, 2, 3):
        assert class_density(cube(d), d) == d * F(2 ** (d - 1), 2**d)


def test_class_density_below_vc(rng):
    for _ in range(25):
        h = random_class(rng, 5, int(rng.integers(2, 14)))
        d = vc_dimension(h).value
        for n in (2, 5):
            assert class_density(h, n) <= d


def test_class_density_partial_below_vc():
    for k in (3, 5):
        h = gap_thresholds(k)
        assert class_density(h, k) <= vc_dimension(h).value
    h = HypothesisClass(((0, STAR, 1), (1, 1, STAR), (0, 0, 0), (1, 1, 1), (STAR, 0, 1)), PARTIAL, 3)
    assert class_density(h, 3) <= vc_dimension(h).value


def test_densest_projection_witness():
    mu, pts = densest_projection(intervals(5), 3)
    assert max_density(projected_graph(intervals(5), pts)).mu == mu


def test_star_pruning():
    h = HypothesisClass(((0, STAR), (1, STAR), (0, 0), (1, 1)), PARTIAL, 2)
    assert star_free(h).rows == ((0, 0), (1, 1))
    assert star_free(HypothesisClass(((STAR,),), PARTIAL, 1)) is None
    assert projected_graph(HypothesisClass(((STAR,),), PARTIAL, 1), [0], prune_star=True) is None


def test_class_density_budget():
    with pytest.raises(BudgetExceeded):
        class_density(thresholds(6), 3, Budget(density_domain=5))


def test_json_export():
    out = square().to_json()
    assert len(out["vertices"]) == 4 and len(out["edges"]) == 4
    assert {"members", "coordinate", "context"} <= set(out["edges"][0])
