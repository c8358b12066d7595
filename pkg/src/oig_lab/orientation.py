"""Hypergraph orientation with bounded out-degree via integral max-flow.

The network has a source, one node per hyperedge of size >= 2, one node per
vertex, and a sink. Source -> edge arcs carry |e| - 1, edge -> member arcs
carry 1, vertex -> sink arcs carry d. A flow saturating the source leaves
exactly one member of each edge without flow; that member becomes the head.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .classes import DEFAULT_BUDGET, PARTIAL, REAL, Budget, HypothesisClass
from .errors import BudgetExceeded, InvalidArgument
from .hypergraph import OneInclusionHypergraph, projected_graph


@dataclass(frozen=True)
class FlowNetwork:
    num_nodes: int
    source: int
    sink: int
    arcs: tuple[tuple[int, int, int], ...]  # (tail, head, capacity)

    def __post_init__(self):
        for u, v, c in self.arcs:
            if c < 0 or int(c) != c:
                raise InvalidArgument("capacities must be non-negative integers")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise InvalidArgument("arc endpoint outside the network")


@dataclass(frozen=True)
class FlowResult:
    value: int
    flows: tuple[int, ...]  # one entry per arc, same order as network.arcs


def max_flow(network: FlowNetwork) -> FlowResult:
    """Dinic's algorithm. Adjacency follows arc order, so the result is deterministic."""
    n = network.num_nodes
    s, t = network.source, network.sink
    # residual graph: parallel lists, arc 2k forward, 2k+1 reverse
    to, cap, adj = [], [], [[] for _ in range(n)]
    for u, v, c in network.arcs:
        adj[u].append(len(to))
        to.append(v)
        cap.append(c)
        adj[v].append(len(to))
        to.append(u)
        cap.append(0)
    if s == t:
        return FlowResult(0, tuple(0 for _ in network.arcs))

    total = 0
    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for a in adj[u]:
                if cap[a] > 0 and level[to[a]] < 0:
                    level[to[a]] = level[u] + 1
                    q.append(to[a])
        if level[t] < 0:
            break
        it = [0] * n

        def push(u, limit):
            if u == t:
                return limit
            while it[u] < len(adj[u]):
                a = adj[u][it[u]]
                v = to[a]
                if cap[a] > 0 and level[v] == level[u] + 1:
                    got = push(v, min(limit, cap[a]))
                    if got:
                        cap[a] -= got
                        cap[a ^ 1] += got
                        return got
                it[u] += 1
            return 0

        while True:
            f = push(s, float("inf"))
            if not f:
                break
            total += f
    flows = tuple(cap[2 * k + 1] for k in range(len(network.arcs)))
    return FlowResult(int(total), flows)


def brute_force_min_cut(network: FlowNetwork) -> int:
    """Minimum s-t cut by trying every source side. Only for tiny networks."""
    inner = [v for v in range(network.num_nodes) if v not in (network.source, network.sink)]
    if len(inner) > 20:
        raise BudgetExceeded("brute-force min cut is limited to 20 inner nodes")
    best = None
    for bits in range(1 << len(inner)):
        side = {network.source} | {inner[i] for i in range(len(inner)) if bits >> i & 1}
        cut = sum(c for u, v, c in network.arcs if u in side and v not in side)
        if best is None or cut < best:
            best = cut
    return best


@dataclass(frozen=True)
class OrientationNetwork:
    network: FlowNetwork
    edge_ids: tuple[int, ...]  # hyperedge index behind each edge-layer node
    member_arcs: tuple[tuple[int, int], ...]  # (arc index, vertex) in network order

    @property
    def demand(self) -> int:
        """m = sum over edges of |e| - 1."""
        return sum(c for u, _, c in self.network.arcs if u == self.network.source)


def orientation_network(g: OneInclusionHypergraph, d: int) -> OrientationNetwork:
    if d < 0:
        raise InvalidArgument("out-degree bound must be non-negative")
    edge_ids = g.proper_edges
    ne, nv = len(edge_ids), g.num_vertices
    s, t = 0, 1 + ne + nv
    arcs, member_arcs = [], []
    for j, k in enumerate(edge_ids):
        arcs.append((s, 1 + j, len(g.edges[k]) - 1))
    for j, k in enumerate(edge_ids):
        for v in g.edges[k].members:
            member_arcs.append((len(arcs), v))
            arcs.append((1 + j, 1 + ne + v, 1))
    for v in range(nv):
        arcs.append((1 + ne + v, t, d))
    return OrientationNetwork(FlowNetwork(t + 1, s, t, tuple(arcs)), edge_ids, tuple(member_arcs))


@dataclass(frozen=True)
class Orientation:
    head: dict  # hyperedge index -> head vertex, for edges of size >= 2
    out_degree: tuple[int, ...]

    @property
    def max_out_degree(self) -> int:
        return max(self.out_degree, default=0)


def out_degrees(g: OneInclusionHypergraph, head: dict) -> tuple[int, ...]:
    deg = [0] * g.num_vertices
    for k in g.proper_edges:
        h = head[k]
        for v in g.edges[k].members:
            if v != h:
                deg[v] += 1
    return tuple(deg)


def orient(g: OneInclusionHypergraph, d: int) -> Orientation | None:
    """An orientation with max out-degree <= d, or None when none exists."""
    net = orientation_network(g, d)
    res = max_flow(net.network)
    if res.value < net.demand:
        return None
    carried: dict[int, set[int]] = {}
    for arc, v in net.member_arcs:
        if res.flows[arc]:
            tail = net.network.arcs[arc][0]
            carried.setdefault(tail, set()).add(v)
    head = {}
    for j, k in enumerate(net.edge_ids):
        members = g.edges[k].members
        free = [v for v in members if v not in carried.get(1 + j, ())]
        if len(free) != 1:
            raise AssertionError("saturating flow must leave exactly one head per edge")
        head[k] = free[0]
    return Orientation(head, out_degrees(g, head))


def min_out_degree_orientation(g: OneInclusionHypergraph) -> tuple[int, Orientation]:
    """Smallest feasible out-degree bound and the canonical orientation achieving it."""
    lo, hi = 0, max(g.degrees, default=0)
    best = orient(g, hi)
    while lo < hi:
        mid = (lo + hi) // 2
        o = orient(g, mid)
        if o is None:
            lo = mid + 1
        else:
            hi, best = mid, o
    return hi, best


def ceil_class_density(
    cls: HypothesisClass,
    n: int,
    budget: Budget = DEFAULT_BUDGET,
    prune_star: bool | None = None,
) -> int:
    """ceil(dens_n(H)) through orientations instead of subset enumeration.

    An orientation with max out-degree d bounds every induced density by d,
    and a bound d >= mu is always orientable, so the smallest orientable d is
    exactly ceil(mu). This avoids the vertex budget of the exhaustive search.
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
    best = 0
    for size in range(1, min(n, cls.domain_size) + 1):
        for pts in itertools.combinations(range(cls.domain_size), size):
            g = projected_graph(cls, pts, prune_star)
            if g is not None:
                best = max(best, min_out_degree_orientation(g)[0])
    return best


def orientation_to_json(g: OneInclusionHypergraph, o: Orientation) -> dict:
    return g.to_json(o)


def validate_orientation(g: OneInclusionHypergraph, o: Orientation, d: int | None = None) -> Sequence[str]:
    """Problems with an orientation, as messages; empty when it is sound."""
    problems = []
    for k in g.proper_edges:
        if o.head.get(k) not in g.edges[k].members:
            problems.append(f"edge {k} head {o.head.get(k)} is not a member")
    if not problems and out_degrees(g, o.head) != o.out_degree:
        problems.append("stored out-degrees disagree with the heads")
    if d is not None and o.max_out_degree > d:
        problems.append(f"max out-degree {o.max_out_degree} exceeds {d}")
    return problems
