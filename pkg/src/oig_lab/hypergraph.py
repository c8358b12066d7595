"""One-inclusion hypergraphs and their density quantities.

Densities are exact :class:`~fractions.Fraction` values. Edges are kept as a
list, so an induced sub-hypergraph counts ``e & U`` once per original edge;
for one-inclusion hypergraphs two distinct edges never share two vertices,
so this coincides with the set-of-edges reading.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .classes import (
    DEFAULT_BUDGET,
    PARTIAL,
    REAL,
    STAR,
    Budget,
    HypothesisClass,
    project,
)
from .errors import BudgetExceeded, InvalidArgument


@dataclass(frozen=True)
class Hyperedge:
    members: tuple[int, ...]
    coordinate: int | None = None  # held-out domain point
    context: tuple | None = None  # labels on the remaining coordinates

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True, eq=False)
class OneInclusionHypergraph:
    vertices: tuple
    edges: tuple[Hyperedge, ...]
    points: tuple[int, ...] = ()

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Iterable[Iterable[int]]) -> "OneInclusionHypergraph":
        """A plain hypergraph on vertices 0..num_vertices-1 (no class behind it)."""
        es = []
        for e in edges:
            members = tuple(sorted(set(e)))
            if not members:
                raise InvalidArgument("hyperedges must be nonempty")
            if members[-1] >= num_vertices or members[0] < 0:
                raise InvalidArgument(f"edge {members} references a missing vertex")
            es.append(Hyperedge(members))
        return cls(tuple((v,) for v in range(num_vertices)), tuple(es))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def proper_edges(self) -> tuple[int, ...]:
        """Indices of edges with at least two members."""
        return tuple(k for k, e in enumerate(self.edges) if len(e) >= 2)

    @cached_property
    def edge_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << v for v in e.members) for e in self.edges)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        """Number of edges of size >= 2 containing each vertex."""
        deg = [0] * self.num_vertices
        for k in self.proper_edges:
            for v in self.edges[k].members:
                deg[v] += 1
        return tuple(deg)

    @cached_property
    def edge_index(self) -> dict:
        return {(e.coordinate, e.context): k for k, e in enumerate(self.edges)}

    def to_json(self, orientation=None) -> dict:
        out = {
            "points": list(self.points),
            "vertices": [[_jsonable(v) for v in row] for row in self.vertices],
            "edges": [],
        }
        for k, e in enumerate(self.edges):
            item = {"members": list(e.members)}
            if e.coordinate is not None:
                item["coordinate"] = e.coordinate
                item["context"] = [_jsonable(v) for v in e.context]
            if orientation is not None:
                item["head"] = orientation.head.get(k, e.members[0] if len(e) == 1 else None)
            out["edges"].append(item)
        if orientation is not None:
            out["out_degree"] = list(orientation.out_degree)
        return out


def _jsonable(v):
    if v is STAR:
        return "*"
    if isinstance(v, Fraction):
        return str(v)
    return v


@dataclass(frozen=True)
class DensityReport:
    dens: Fraction
    mu: Fraction
    avgdeg: Fraction
    witness_subset: tuple[int, ...]

    def as_dict(self) -> dict:
        return {
            "dens": str(self.dens),
            "mu": str(self.mu),
            "avgdeg": str(self.avgdeg),
            "witness_subset": list(self.witness_subset),
        }


def build_oig(projected: HypothesisClass, points: Sequence[int] | None = None) -> OneInclusionHypergraph:
    """The one-inclusion hypergraph of an already projected class.

    ``points`` names the domain point behind each column and only affects the
    edge tags; it defaults to ``0..m-1``.
    """
    if projected.alphabet == REAL:
        raise InvalidArgument("threshold a real-valued class before building its hypergraph")
    m = projected.domain_size
    pts = tuple(points) if points is not None else tuple(range(m))
    if len(pts) != m:
        raise InvalidArgument("points must name every column of the projected class")
    rows = projected.rows
    edges = []
    for i in range(m):
        groups: dict[tuple, list[int]] = {}
        for k, r in enumerate(rows):
            groups.setdefault(r[:i] + r[i + 1 :], []).append(k)
        for ctx in sorted(groups):
            edges.append(Hyperedge(tuple(groups[ctx]), pts[i], ctx))
    return OneInclusionHypergraph(rows, tuple(edges), pts)


def density(g: OneInclusionHypergraph, subset: Iterable[int] | None = None) -> Fraction:
    """Dens of ``g`` or of the sub-hypergraph induced by ``subset``."""
    if subset is None:
        if g.num_vertices == 0:
            raise InvalidArgument("density of an empty hypergraph is undefined")
        return Fraction(sum(len(e) - 1 for e in g.edges), g.num_vertices)
    u = set(subset)
    if not u:
        raise InvalidArgument("density needs a nonempty vertex subset")
    if not u <= set(range(g.num_vertices)):
        raise InvalidArgument("subset references a missing vertex")
    total = 0
    for e in g.edges:
        c = sum(1 for v in e.members if v in u)
        if c >= 1:
            total += c - 1
    return Fraction(total, len(u))


def avg_degree(g: OneInclusionHypergraph) -> Fraction:
    if g.num_vertices == 0:
        raise InvalidArgument("average degree of an empty hypergraph is undefined")
    return Fraction(sum(len(g.edges[k]) for k in g.proper_edges), g.num_vertices)


def max_density(g: OneInclusionHypergraph, budget: Budget = DEFAULT_BUDGET) -> DensityReport:
    """Exact maximum induced density by enumerating every nonempty vertex subset."""
    n = g.num_vertices
    if n == 0:
        raise InvalidArgument("max density of an empty hypergraph is undefined")
    if n > budget.density_vertices:
        raise BudgetExceeded(f"{n} vertices exceed the density budget {budget.density_vertices}")
    subsets = np.arange(1, 1 << n, dtype=np.uint32)
    sizes = np.bitwise_count(subsets).astype(np.int64)
    num = np.zeros(len(subsets), dtype=np.int64)
    for k in g.proper_edges:
        c = np.bitwise_count(subsets & np.uint32(g.edge_masks[k])).astype(np.int64)
        num += np.maximum(c - 1, 0)
    # distinct ratios with denominators <= 20 differ by >= 1/400, far above float error
    ratio = num / sizes
    best = int(np.argmax(ratio))
    mu = Fraction(int(num[best]), int(sizes[best]))
    mask = int(subsets[best])
    witness = tuple(v for v in range(n) if mask >> v & 1)
    return DensityReport(density(g), mu, avg_degree(g), witness)


def star_free(projected: HypothesisClass) -> HypothesisClass | None:
    """Drop every row carrying * on some column; None when nothing survives."""
    rows = [r for r in projected.rows if STAR not in r]
    if not rows:
        return None
    return HypothesisClass(tuple(rows), projected.alphabet, projected.domain_size)


def projected_graph(cls: HypothesisClass, points: Iterable[int], prune_star: bool = False):
    """G(H|_U) for a point set U, optionally with the *-carrying rows removed first."""
    pts = tuple(sorted(set(points)))
    proj = project(cls, pts)
    if prune_star:
        proj = star_free(proj)
        if proj is None:
            return None
    return build_oig(proj, pts)


def densest_projection(
    cls: HypothesisClass,
    n: int,
    budget: Budget = DEFAULT_BUDGET,
    prune_star: bool | None = None,
) -> tuple[Fraction, tuple[int, ...]]:
    """max over point sets U with 1 <= |U| <= n of mu(G(H|_U)), with the maximizing U.

    A sample of size n with repetitions only shrinks its point set, so
    enumerating point sets of size at most n covers every sample.
    """
    if n < 1:
        raise InvalidArgument("sample size must be at least 1")
    if cls.alphabet == REAL:
        raise InvalidArgument("class density needs a discrete class")
    if prune_star is None:
        prune_star = cls.alphabet == PARTIAL
    if cls.domain_size > budget.density_domain:
        raise BudgetExceeded(
            f"domain size {cls.domain_size} exceeds the density budget {budget.density_domain}"
        )
    best, arg = Fraction(0), ()
    for size in range(1, min(n, cls.domain_size) + 1):
        for pts in itertools.combinations(range(cls.domain_size), size):
            g = projected_graph(cls, pts, prune_star)
            if g is None:
                continue
            mu = max_density(g, budget).mu
            if mu > best:
                best, arg = mu, pts
    return best, arg


def class_density(
    cls: HypothesisClass,
    n: int,
    budget: Budget = DEFAULT_BUDGET,
    prune_star: bool | None = None,
) -> Fraction:
    """dens_n(H), exactly. Partial classes are pruned of * rows by default."""
    return densest_projection(cls, n, budget, prune_star)[0]
