"""Golden graphs, a random latent-DAG generator and brute-force graph oracles.

The oracles here are deliberately naive (networkx ancestry, explicit path
enumeration) and share no code with ``verma_kit.graph``.
"""

from __future__ import annotations

from itertools import permutations
from itertools import product as itertools_product
from pathlib import Path

import networkx as nx
import numpy as np

from verma_kit import LatentDag, parse_graph, prune_hidden_nonancestors

GRAPHS = Path(__file__).resolve().parent.parent / "graphs"
GOLDEN = ("fig1a", "fig1b", "fig2", "fig3a", "fig4a")


def load(name: str):
    path = GRAPHS / name if "." in name else GRAPHS / f"{name}.txt"
    return parse_graph(path.read_text())


def random_latent_dag(seed: int, max_observed: int = 6, max_hidden: int = 3, p: float = 0.4) -> LatentDag:
    rng = np.random.default_rng(seed)
    n_obs = int(rng.integers(2, max_observed + 1))
    n_hid = int(rng.integers(0, max_hidden + 1))
    observed = [f"V{i + 1}" for i in range(n_obs)]
    hidden = [f"U{i + 1}" for i in range(n_hid)]
    nodes = observed + hidden
    perm = [nodes[i] for i in rng.permutation(len(nodes))]
    edges = set()
    for i, a in enumerate(perm):
        for b in perm[i + 1 :]:
            # hidden nodes get more children so confounding is common
            q = 0.7 if a in hidden else p
            if rng.random() < q:
                edges.add((a, b))
    return prune_hidden_nonancestors(LatentDag(tuple(observed), tuple(hidden), frozenset(edges)))


def digraph(g: LatentDag, nodes=None) -> nx.DiGraph:
    d = nx.DiGraph()
    keep = set(g.observed) | set(g.hidden) if nodes is None else set(nodes)
    d.add_nodes_from(keep)
    d.add_edges_from((a, b) for a, b in g.edges if a in keep and b in keep)
    return d


def oracle_hidden_ancestors(g: LatentDag, s) -> set:
    d = digraph(g, set(s) | set(g.hidden))
    out = set()
    for v in s:
        out |= nx.ancestors(d, v)
    return out & set(g.hidden)


def oracle_subgraph(g: LatentDag, c) -> nx.DiGraph:
    return digraph(g, set(c) | oracle_hidden_ancestors(g, c))


def oracle_ancestral_closure(g: LatentDag, s, within) -> set:
    d = oracle_subgraph(g, within)
    out = set(s)
    for v in s:
        out |= nx.ancestors(d, v)
    return out & set(g.observed)


def oracle_descendant_closure(g: LatentDag, s, within) -> set:
    d = oracle_subgraph(g, within)
    out = set(s)
    for v in s:
        out |= nx.descendants(d, v)
    return out & set(g.observed)


def _hidden_interior_paths(g: LatentDag, src, dst):
    d = digraph(g)
    for path in nx.all_simple_paths(d, src, dst):
        if all(n in g.hidden for n in path[1:-1]):
            yield path


def oracle_effective_parents(g: LatentDag, s) -> set:
    out = set(s)
    for x in g.observed:
        for y in s:
            if x != y and any(True for _ in _hidden_interior_paths(g, x, y)):
                out.add(x)
    return out


def oracle_projection(g: LatentDag):
    """Directed and bidirected edges by literal path enumeration."""
    directed, bidirected = set(), set()
    for x in g.observed:
        for y in g.observed:
            if x != y and any(True for _ in _hidden_interior_paths(g, x, y)):
                directed.add((x, y))
    for u in g.hidden:
        reach = [y for y in g.observed if any(True for _ in _hidden_interior_paths(g, u, y))]
        for a in reach:
            for b in reach:
                if a < b:
                    bidirected.add((a, b))
    return directed, bidirected


def oracle_c_components(g: LatentDag, subset) -> set:
    """Group observed nodes whose hidden parents are joined by a path of G(subset)
    that passes only hidden nodes and head-to-head observed nodes."""
    d = oracle_subgraph(g, subset)
    hidden = [n for n in d.nodes if n in g.hidden]
    skeleton = d.to_undirected()

    def connected(a, b):
        if a == b:
            return True
        for path in nx.all_simple_paths(skeleton, a, b):
            ok = True
            for k in range(1, len(path) - 1):
                n = path[k]
                if n in g.observed and not (d.has_edge(path[k - 1], n) and d.has_edge(path[k + 1], n)):
                    ok = False
                    break
            if ok:
                return True
        return False

    blocks = []
    for v in sorted(subset):
        hp = [p for p in d.predecessors(v) if p in hidden]
        for block in blocks:
            w = next(iter(block))
            hw = [p for p in d.predecessors(w) if p in hidden]
            if hp and hw and connected(hp[0], hw[0]):
                block.add(v)
                break
        else:
            blocks.append({v})
    return {frozenset(b) for b in blocks}


def oracle_topological_order(g: LatentDag, subset) -> tuple:
    subset = sorted(subset)
    d = oracle_subgraph(g, subset)
    anc = {v: nx.ancestors(d, v) & set(subset) for v in subset}
    for perm in permutations(subset):  # lexicographic
        pos = {v: i for i, v in enumerate(perm)}
        if all(pos[a] < pos[v] for v in subset for a in anc[v]):
            return perm
    raise AssertionError("no topological order")


def oracle_d_separated(g: LatentDag, x, y, z) -> bool:
    """Enumerate every simple path of the skeleton and test it for blocking."""
    d = digraph(g)
    z = set(z)
    skeleton = d.to_undirected()
    for path in nx.all_simple_paths(skeleton, x, y):
        active = True
        for k in range(1, len(path) - 1):
            a, n, b = path[k - 1], path[k], path[k + 1]
            collider = d.has_edge(a, n) and d.has_edge(b, n)
            if collider:
                if n not in z and not (nx.descendants(d, n) & z):
                    active = False
            elif n in z:
                active = False
            if not active:
                break
        if active:
            return False
    return True


def _states(m, nodes):
    return itertools_product(*(range(m.domains[n]) for n in nodes))


def brute_q(m, s) -> np.ndarray:
    """Q[S] by a plain loop over every observed and hidden configuration.

    Returns an array over the sorted observed nodes.  Every hidden node's CPT
    is included, which is harmless: non-ancestors of S sum to one.
    """
    g = m.graph
    obs = sorted(g.observed)
    hid = sorted(g.hidden)
    members = set(s) | set(hid)
    out = np.zeros([m.domains[v] for v in obs])
    for v in _states(m, obs):
        total = 0.0
        for u in _states(m, hid):
            value = dict(zip(obs, v))
            value.update(zip(hid, u))
            term = 1.0
            for n in members:
                term *= m.cpts[n][(value[n],) + tuple(value[p] for p in sorted(g.parents[n]))]
            total += term
        out[v] = total
    return out


def brute_joint(m) -> np.ndarray:
    return brute_q(m, m.graph.observed)
