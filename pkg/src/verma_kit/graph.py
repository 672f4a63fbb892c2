"""Latent DAGs, ADMGs and the graph primitives the constraint search is built on.

Every set-valued query is evaluated in the subgraph ``G(C)``: the observed
nodes ``C`` together with the hidden nodes that are ancestors of ``C`` through
hidden nodes only (``U(C)``).  ADMGs are handled by expanding each bidirected
edge into a fresh hidden root with two observed children, so a single code
path serves both graph types.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

from .errors import GraphError

NodeId = str
VarSet = frozenset


def canonical(nodes: Iterable[NodeId]) -> tuple[NodeId, ...]:
    return tuple(sorted(nodes))


def format_set(nodes: Iterable[NodeId]) -> str:
    return "{" + ",".join(canonical(nodes)) + "}"


def _check_names(names: Iterable[NodeId]) -> None:
    seen: dict[str, str] = {}
    for name in names:
        if not name:
            raise GraphError("empty node name")
        folded = name.lower()
        if folded in seen and seen[folded] != name:
            # expressions render names in lower case
            raise GraphError(f"node names {seen[folded]!r} and {name!r} differ only by case")
        seen[folded] = name


def _find_cycle_free(nodes: Iterable[NodeId], edges: Iterable[tuple[NodeId, NodeId]]) -> bool:
    indeg = {n: 0 for n in nodes}
    children: dict[NodeId, list[NodeId]] = {n: [] for n in indeg}
    for a, b in edges:
        children[a].append(b)
        indeg[b] += 1
    queue = [n for n, d in indeg.items() if d == 0]
    visited = 0
    while queue:
        n = queue.pop()
        visited += 1
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return visited == len(indeg)


@dataclass(frozen=True)
class LatentDag:
    """A DAG over observed and hidden nodes."""

    observed: tuple[NodeId, ...]
    hidden: tuple[NodeId, ...] = ()
    edges: frozenset[tuple[NodeId, NodeId]] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "observed", tuple(self.observed))
        object.__setattr__(self, "hidden", tuple(self.hidden))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        nodes = self.observed + self.hidden
        if len(set(nodes)) != len(nodes):
            raise GraphError("duplicate or overlapping node declarations")
        _check_names(nodes)
        declared = set(nodes)
        for a, b in self.edges:
            if a not in declared or b not in declared:
                raise GraphError(f"edge {a} -> {b} uses an undeclared node")
            if a == b:
                raise GraphError(f"self-loop on {a}")
        if not _find_cycle_free(nodes, self.edges):
            raise GraphError("graph contains a directed cycle")

    @cached_property
    def nodes(self) -> frozenset[NodeId]:
        return frozenset(self.observed) | frozenset(self.hidden)

    @cached_property
    def hidden_set(self) -> frozenset[NodeId]:
        return frozenset(self.hidden)

    @cached_property
    def observed_set(self) -> frozenset[NodeId]:
        return frozenset(self.observed)

    @cached_property
    def parents(self) -> dict[NodeId, tuple[NodeId, ...]]:
        pa: dict[NodeId, list[NodeId]] = {n: [] for n in self.observed + self.hidden}
        for a, b in self.edges:
            pa[b].append(a)
        return {n: canonical(p) for n, p in pa.items()}

    @cached_property
    def children(self) -> dict[NodeId, tuple[NodeId, ...]]:
        ch: dict[NodeId, list[NodeId]] = {n: [] for n in self.observed + self.hidden}
        for a, b in self.edges:
            ch[a].append(b)
        return {n: canonical(c) for n, c in ch.items()}


@dataclass(frozen=True)
class Admg:
    """Acyclic directed mixed graph over observed nodes."""

    observed: tuple[NodeId, ...]
    directed: frozenset[tuple[NodeId, NodeId]] = field(default_factory=frozenset)
    bidirected: frozenset[tuple[NodeId, NodeId]] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "observed", tuple(self.observed))
        object.__setattr__(self, "directed", frozenset(tuple(e) for e in self.directed))
        bi = set()
        for a, b in self.bidirected:
            if a == b:
                raise GraphError(f"bidirected self-loop on {a}")
            bi.add((min(a, b), max(a, b)))
        object.__setattr__(self, "bidirected", frozenset(bi))
        if len(set(self.observed)) != len(self.observed):
            raise GraphError("duplicate node declarations")
        _check_names(self.observed)
        declared = set(self.observed)
        for a, b in self.directed | self.bidirected:
            if a not in declared or b not in declared:
                raise GraphError(f"edge between {a} and {b} uses an undeclared node")
        for a, b in self.directed:
            if a == b:
                raise GraphError(f"self-loop on {a}")
        if not _find_cycle_free(self.observed, self.directed):
            raise GraphError("directed part contains a cycle")

    @cached_property
    def latent(self) -> LatentDag:
        """Semi-Markovian expansion: one hidden root per bidirected edge.

        The hidden names contain ``<->`` and so can never collide with a
        parsed identifier.
        """
        hidden = []
        edges = set(self.directed)
        for a, b in sorted(self.bidirected):
            u = f"{a}<->{b}"
            hidden.append(u)
            edges.add((u, a))
            edges.add((u, b))
        return LatentDag(self.observed, tuple(hidden), frozenset(edges))

    def parents_of(self, node: NodeId) -> frozenset[NodeId]:
        return frozenset(a for a, b in self.directed if b == node)


Graph = Union[LatentDag, Admg]


def as_latent(g: Graph) -> LatentDag:
    if isinstance(g, Admg):
        return g.latent
    return g


# -- reachability ---------------------------------------------------------------


def _reach(adj: dict[NodeId, tuple[NodeId, ...]], start: Iterable[NodeId], allowed) -> set[NodeId]:
    seen = set(start)
    stack = list(seen)
    while stack:
        n = stack.pop()
        for m in adj[n]:
            if m in allowed and m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def hidden_ancestors(g: Graph, s: Iterable[NodeId]) -> frozenset[NodeId]:
    """``U(S)``: hidden ancestors of ``s`` in the subgraph over ``s`` and all hidden nodes."""
    lg = as_latent(g)
    s = frozenset(s)
    reached = _reach(lg.parents, s, s | lg.hidden_set)
    return frozenset(reached & lg.hidden_set)


def subgraph_nodes(g: Graph, c: Iterable[NodeId]) -> frozenset[NodeId]:
    """Node set of ``G(C)``."""
    c = frozenset(c)
    return c | hidden_ancestors(g, c)


def ancestral_closure(g: Graph, s: Iterable[NodeId], within: Iterable[NodeId]) -> frozenset[NodeId]:
    """Observed members of ``within`` that are in ``s`` or ancestors of ``s`` in ``G(within)``."""
    lg = as_latent(g)
    nodes = subgraph_nodes(lg, within)
    return frozenset(_reach(lg.parents, s, nodes) & lg.observed_set)


def descendant_closure(g: Graph, s: Iterable[NodeId], within: Iterable[NodeId]) -> frozenset[NodeId]:
    lg = as_latent(g)
    nodes = subgraph_nodes(lg, within)
    return frozenset(_reach(lg.children, s, nodes) & lg.observed_set)


def is_ancestral(g: Graph, w: Iterable[NodeId], within: Iterable[NodeId]) -> bool:
    w = frozenset(w)
    return ancestral_closure(g, w, within) == w


def effective_parents(g: Graph, s: Iterable[NodeId]) -> frozenset[NodeId]:
    """``Pa+(S)``: ``s`` plus every observed node reaching a member of ``s``
    along a directed path whose interior is hidden."""
    lg = as_latent(g)
    s = frozenset(s)
    result = set(s)
    seen: set[NodeId] = set()
    stack = list(s)
    while stack:
        n = stack.pop()
        for p in lg.parents[n]:
            if p in lg.hidden_set:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
            else:
                result.add(p)
    return frozenset(result)


def prune_hidden_nonancestors(g: LatentDag) -> LatentDag:
    """Drop hidden nodes that are not ancestors of any observed node."""
    keep = _reach(g.parents, g.observed, g.nodes)
    hidden = tuple(h for h in g.hidden if h in keep)
    if len(hidden) == len(g.hidden):
        return g
    edges = frozenset((a, b) for a, b in g.edges if a in keep and b in keep)
    return LatentDag(g.observed, hidden, edges)


# -- orders ---------------------------------------------------------------------


def _precedence(g: Graph, subset: frozenset[NodeId]) -> dict[NodeId, frozenset[NodeId]]:
    """For each node of ``subset``, its strict observed ancestors in ``G(subset)``."""
    return {v: ancestral_closure(g, {v}, subset) - {v} for v in subset}


def topological_order(g: Graph, subset: Iterable[NodeId] | None = None) -> tuple[NodeId, ...]:
    """Lexicographically least topological order of ``subset`` in ``G(subset)``."""
    lg = as_latent(g)
    subset = frozenset(lg.observed if subset is None else subset)
    before = _precedence(lg, subset)
    indeg = {v: len(before[v]) for v in subset}
    after: dict[NodeId, list[NodeId]] = {v: [] for v in subset}
    for v, anc in before.items():
        for a in anc:
            after[a].append(v)
    heap = [v for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in after[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    return tuple(order)


def all_topological_orders(g: Graph, subset: Iterable[NodeId] | None = None) -> Iterator[tuple[NodeId, ...]]:
    """Every topological order of ``subset`` in ``G(subset)``, lexicographically."""
    lg = as_latent(g)
    subset = frozenset(lg.observed if subset is None else subset)
    before = _precedence(lg, subset)

    def extend(prefix: list[NodeId], placed: set[NodeId]):
        if len(prefix) == len(subset):
            yield tuple(prefix)
            return
        for v in sorted(subset - placed):
            if before[v] <= placed:
                prefix.append(v)
                placed.add(v)
                yield from extend(prefix, placed)
                placed.remove(v)
                prefix.pop()

    yield from extend([], set())


def is_topological_order(g: Graph, order: Iterable[NodeId]) -> bool:
    lg = as_latent(g)
    order = tuple(order)
    if sorted(order) != sorted(lg.observed):
        return False
    pos = {v: i for i, v in enumerate(order)}
    full = frozenset(order)
    return all(pos[a] < pos[v] for v, anc in _precedence(lg, full).items() for a in anc)


# -- c-components -----------------------------------------------------------------


def _sort_blocks(blocks: Iterable[frozenset[NodeId]]) -> tuple[frozenset[NodeId], ...]:
    return tuple(sorted(blocks, key=lambda b: (len(b), canonical(b))))


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def c_components(g: Graph, subset: Iterable[NodeId] | None = None) -> tuple[frozenset[NodeId], ...]:
    """Partition ``subset`` into c-components of ``G(subset)``.

    Hidden nodes of the subgraph are merged when adjacent or when they share a
    child; an observed node joins the group of its hidden parents, and nodes
    with no hidden parent are singletons.  Blocks are ordered by size, then by
    their sorted members.
    """
    lg = as_latent(g)
    subset = frozenset(lg.observed if subset is None else subset)
    hidden = hidden_ancestors(lg, subset)
    nodes = subset | hidden
    uf = _UnionFind(hidden)
    for a, b in lg.edges:
        if a in hidden and b in hidden:
            uf.union(a, b)
    for n in nodes:
        hp = [p for p in lg.parents[n] if p in hidden]
        for p in hp[1:]:
            uf.union(hp[0], p)
    groups: dict[object, set[NodeId]] = {}
    for v in subset:
        hp = [p for p in lg.parents[v] if p in hidden]
        key = uf.find(hp[0]) if hp else ("", v)
        groups.setdefault(key, set()).add(v)
    return _sort_blocks(frozenset(b) for b in groups.values())


def component_of(g: Graph, v: NodeId, subset: Iterable[NodeId]) -> frozenset[NodeId]:
    for block in c_components(g, subset):
        if v in block:
            return block
    raise KeyError(v)


def admg_c_components(g: Admg, subset: Iterable[NodeId] | None = None) -> tuple[frozenset[NodeId], ...]:
    """Bidirected-connected components of ``subset``."""
    subset = frozenset(g.observed if subset is None else subset)
    uf = _UnionFind(subset)
    for a, b in g.bidirected:
        if a in subset and b in subset:
            uf.union(a, b)
    groups: dict[NodeId, set[NodeId]] = {}
    for v in subset:
        groups.setdefault(uf.find(v), set()).add(v)
    return _sort_blocks(frozenset(b) for b in groups.values())


# -- projection -------------------------------------------------------------------


def _hidden_interior_reach(lg: LatentDag, start: NodeId) -> set[NodeId]:
    """Observed nodes reachable from ``start`` by directed paths with hidden interior."""
    found = set()
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for c in lg.children[n]:
            if c in lg.hidden_set:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
            else:
                found.add(c)
    return found


def project(g: Graph) -> Admg:
    """Latent projection onto the observed nodes."""
    lg = prune_hidden_nonancestors(as_latent(g))
    directed = set()
    for x in lg.observed:
        for y in _hidden_interior_reach(lg, x):
            directed.add((x, y))
    bidirected = set()
    for u in lg.hidden:
        reach = sorted(_hidden_interior_reach(lg, u))
        for i, a in enumerate(reach):
            for b in reach[i + 1 :]:
                bidirected.add((a, b))
    return Admg(lg.observed, frozenset(directed), frozenset(bidirected))


# -- d-separation -----------------------------------------------------------------


def d_separated(g: Graph, x: NodeId, y: NodeId, z: Iterable[NodeId] = ()) -> bool:
    """Check ``x`` and ``y`` are d-separated by ``z`` (moralized ancestral graph)."""
    lg = as_latent(g)
    z = frozenset(z)
    if x == y or x in z or y in z:
        raise ValueError("x and y must be distinct and outside the conditioning set")
    anc = _reach(lg.parents, z | {x, y}, lg.nodes)
    adj: dict[NodeId, set[NodeId]] = {n: set() for n in anc}
    for n in anc:
        pa = lg.parents[n]
        for p in pa:
            adj[n].add(p)
            adj[p].add(n)
        for i, p in enumerate(pa):
            for q in pa[i + 1 :]:
                adj[p].add(q)
                adj[q].add(p)
    seen = {x}
    stack = [x]
    while stack:
        n = stack.pop()
        for m in adj[n]:
            if m in z or m in seen:
                continue
            if m == y:
                return False
            seen.add(m)
            stack.append(m)
    return True
