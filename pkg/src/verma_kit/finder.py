"""Systematic search for conditional-independence and functional constraints.

For each node ``v_i`` of a topological order:

* **A1** builds the c-factor of ``v_i``'s c-component ``S_i`` in the prefix
  graph ``G(V^(i))``; if ``S_i``'s effective parents miss some predecessor,
  ``v_i`` is independent of those predecessors.
* **A2** sums ``Q[S_i]`` over every descendent set ``D`` of ``G(S_i)`` not
  containing ``v_i``.  The result is ``Q[S_i \\ D]``; any variable the
  expression mentions beyond ``Pa+(S_i \\ D)`` yields a functional
  constraint.  When ``G(S_i \\ D)`` splits, the ratio
  ``Q[D'] / Σ_{v_i} Q[D']`` depends only on ``Pa+(E_i)`` (``E_i`` the
  component of ``v_i``), and the search recurses into ``Q[E_i]``.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from itertools import combinations, islice
from typing import Literal, Optional

import numpy as np

from .errors import ComponentTooLarge
from .graph import (
    Graph,
    LatentDag,
    NodeId,
    all_topological_orders,
    c_components,
    canonical,
    component_of,
    descendant_closure,
    effective_parents,
    format_set,
    prune_hidden_nonancestors,
    topological_order,
)
from .qexpr import (
    QTagged,
    c_factor,
    free_args,
    lemma1_marginalize,
    lemma2_decompose,
    make_quotient,
    render,
)

logger = logging.getLogger(__name__)

CI = "conditional_independence"
FUNCTIONAL = "functional"

EQ_CHAIN = "Q[S] = Π_{V_i ∈ S} P(v_i | pa+(T_i) \\ {v_i})"
EQ_MARGINAL = "Σ_{d} Q[S] = Q[S \\ D]  (D a descendent set of G(S))"
EQ_RATIO = "Q[D'] / Σ_{v_i} Q[D'] depends only on Pa+(E_i)"
EQ_DECOMPOSE = "Q[E] = Π_{h_i ∈ E} Q[H^(i)] / Q[H^(i-1)]"


@dataclass(frozen=True)
class DerivationStep:
    step: str
    equation: str
    scope_before: frozenset[NodeId]
    scope_after: frozenset[NodeId]
    detail: str = ""


@dataclass(frozen=True)
class Constraint:
    kind: str
    q: Optional[QTagged] = None
    extraneous: frozenset[NodeId] = frozenset()
    x: Optional[NodeId] = None
    others: frozenset[NodeId] = frozenset()
    given: frozenset[NodeId] = frozenset()
    derivation: tuple[DerivationStep, ...] = ()
    subsumed_by: Optional[str] = None
    id: str = ""
    orders: tuple[tuple[NodeId, ...], ...] = ()

    def __post_init__(self):
        if self.kind == FUNCTIONAL:
            if self.q is None or not self.extraneous:
                raise ValueError("functional constraint needs an expression and extraneous variables")
            if self.extraneous != free_args(self.q.expr) - self.q.claimed_args:
                raise ValueError("extraneous set must equal free arguments minus claimed arguments")
        elif self.kind == CI:
            if self.x is None or not self.others:
                raise ValueError("independence constraint needs x and a non-empty 'others'")
            if self.x in self.others | self.given or self.others & self.given:
                raise ValueError("independence sets must be disjoint")
        else:
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    @property
    def rendered(self) -> Optional[str]:
        return render(self.q.expr) if self.q is not None else None

    def statement(self) -> str:
        if self.kind == CI:
            return f"{self.x} ⫫ {format_set(self.others)} | {format_set(self.given)}"
        ext = "{" + ",".join(v.lower() for v in canonical(self.extraneous)) + "}"
        return f"{self.rendered} is independent of {ext}"

    def key(self):
        if self.kind == CI:
            return (CI, self.x, canonical(self.others), canonical(self.given))
        return (FUNCTIONAL, self.rendered, canonical(self.q.claimed_args), canonical(self.extraneous))


@dataclass(frozen=True)
class FinderConfig:
    order_mode: Literal["canonical", "all"] = "canonical"
    order_cap: int = 24
    max_component_size: int = 16
    dedup: Literal["none", "numeric"] = "none"
    dedup_seed: int = 0
    dedup_trials: int = 20

    def __post_init__(self):
        if self.order_mode not in ("canonical", "all"):
            raise ValueError(f"order_mode must be 'canonical' or 'all', not {self.order_mode!r}")
        if self.dedup not in ("none", "numeric"):
            raise ValueError(f"dedup must be 'none' or 'numeric', not {self.dedup!r}")
        if self.order_cap < 1 or self.max_component_size < 1 or self.dedup_trials < 1:
            raise ValueError("order_cap, max_component_size and dedup_trials must be at least 1")


@dataclass
class SearchResult:
    constraints: list[Constraint]
    orders: list[tuple[NodeId, ...]]
    factors: list[QTagged] = field(default_factory=list)


def descendent_sets(g: Graph, scope: Iterable[NodeId], exclude: NodeId) -> list[frozenset[NodeId]]:
    """Non-empty descendent sets of ``G(scope)`` avoiding ``exclude``, by size then lexicographically."""
    scope = frozenset(scope)
    pool = canonical(scope - {exclude})
    found = []
    for size in range(1, len(pool) + 1):
        for combo in combinations(pool, size):
            d = frozenset(combo)
            if descendant_closure(g, d, scope) == d:
                found.append(d)
    return found


def step_a1(g: Graph, i: int, order: Sequence[NodeId]) -> tuple[Optional[Constraint], QTagged]:
    order = tuple(order)
    v = order[i]
    prefix = frozenset(order[: i + 1])
    comp = component_of(g, v, prefix)
    q = c_factor(g, comp, order)
    others = prefix - q.claimed_args
    ci = None
    if others:
        ci = Constraint(CI, x=v, others=others, given=q.claimed_args - {v}, derivation=_a1_trail(q, i))
    return ci, q


def _functional(q: QTagged, trail) -> Optional[Constraint]:
    ext = q.extraneous
    if not ext:
        return None
    return Constraint(FUNCTIONAL, q=q, extraneous=ext, derivation=tuple(trail))


def step_a2(
    q: QTagged,
    g: Graph,
    v: NodeId,
    cfg: FinderConfig = FinderConfig(),
    trail: Sequence[DerivationStep] = (),
    trace: Optional[list[QTagged]] = None,
    visited: Optional[set] = None,
) -> list[Constraint]:
    """Functional constraints from ``q`` (a c-factor containing ``v``), recursively."""
    visited = set() if visited is None else visited
    trace = [] if trace is None else trace
    scope = q.scope
    key = (scope, render(q.expr))
    if key in visited:
        return []
    visited.add(key)
    if len(scope) > cfg.max_component_size:
        raise ComponentTooLarge(scope, cfg.max_component_size)

    found: list[Constraint] = []
    for d in descendent_sets(g, scope, v):
        rest = scope - d
        q_rest = lemma1_marginalize(q, g, rest)
        trace.append(q_rest)
        marg = DerivationStep("marginalize", EQ_MARGINAL, scope, rest, f"sum over {format_set(d)}")
        c = _functional(q_rest, (*trail, marg))
        if c is not None:
            found.append(c)

        comps = c_components(g, rest)
        if len(comps) == 1:
            continue
        e = component_of(g, v, rest)
        without_v = lemma1_marginalize(q_rest, g, rest - {v})
        ratio = QTagged(
            make_quotient(q_rest.expr, without_v.expr),
            e,
            effective_parents(g, e),
            q.order,
            divisor=(e - {v}) or None,
        )
        trace.append(ratio)
        split = DerivationStep(
            "split_ratio",
            EQ_RATIO,
            rest,
            e,
            f"G({format_set(rest)}) has components {' '.join(format_set(b) for b in comps)}",
        )
        c = _functional(ratio, (*trail, marg, split))
        if c is not None:
            found.append(c)

        parts = lemma2_decompose(q_rest, g)
        trace.extend(parts.values())
        dec = DerivationStep("decompose", EQ_DECOMPOSE, rest, e, f"recurse on {parts[e].describe()}")
        found.extend(step_a2(parts[e], g, v, cfg, (*trail, marg, dec), trace, visited))
    return found


def _search_order(g: Graph, order: tuple[NodeId, ...], cfg: FinderConfig, trace: list[QTagged]) -> list[Constraint]:
    out: list[Constraint] = []
    for i, v in enumerate(order):
        ci, q = step_a1(g, i, order)
        trace.append(q)
        if ci is not None:
            out.append(ci)
        out.extend(step_a2(q, g, v, cfg, _a1_trail(q, i), trace))
    return out


def _a1_trail(q: QTagged, i: int) -> tuple[DerivationStep, ...]:
    order = q.order
    prefix = frozenset(order[: i + 1])
    return (
        DerivationStep(
            "c_factor",
            EQ_CHAIN,
            prefix,
            q.scope,
            f"{q.describe()} in G({format_set(prefix)}) along {' < '.join(order)}",
        ),
    )


def run_search(g: Graph, cfg: FinderConfig = FinderConfig()) -> SearchResult:
    """Run the search and also return every c-factor produced along the way."""
    work = prune_hidden_nonancestors(g) if isinstance(g, LatentDag) else g
    if cfg.order_mode == "canonical":
        orders = [topological_order(work)]
    else:
        orders = list(islice(all_topological_orders(work), cfg.order_cap))
    pooled: dict[tuple, Constraint] = {}
    trace: list[QTagged] = []
    for order in orders:
        for c in _search_order(work, order, cfg, trace):
            k = c.key()
            if k in pooled:
                prev = pooled[k]
                if order not in prev.orders:
                    pooled[k] = replace(prev, orders=prev.orders + (order,))
            else:
                pooled[k] = replace(c, orders=(order,))
    constraints = [replace(c, id=f"c{i + 1}") for i, c in enumerate(pooled.values())]
    if cfg.dedup == "numeric":
        constraints = subsumption_annotate(constraints, work, cfg)
    return SearchResult(constraints, orders, trace)


def find_constraints(g: Graph, cfg: FinderConfig = FinderConfig()) -> list[Constraint]:
    return run_search(g, cfg).constraints


def subsumption_annotate(constraints: Sequence[Constraint], g: Graph, cfg: FinderConfig = FinderConfig()) -> list[Constraint]:
    """Mark functional constraints implied by another one; nothing is removed.

    ``c1`` is subsumed by ``c2`` when ``c1``'s scope is inside ``c2``'s, the
    extraneous variables of ``c1`` are among those of ``c2``, and on every
    random model ``c1``'s expression equals ``c2``'s summed over the scope
    difference.  Among several candidates, an equal scope wins, then the
    larger extraneous set, then the earlier constraint.
    """
    from .oracle import Evaluator, observed_joint, random_model

    funcs = [c for c in constraints if c.kind == FUNCTIONAL]
    if len(funcs) < 2:
        return list(constraints)
    evaluators = [
        Evaluator(observed_joint(random_model(g, 2, [cfg.dedup_seed, t])))
        for t in range(cfg.dedup_trials)
    ]

    def matches(c1: Constraint, c2: Constraint) -> bool:
        extra = c2.q.scope - c1.q.scope
        if extra and (c2.q.divisor is not None or c1.q.divisor is not None):
            return False
        for ev in evaluators:
            t1 = ev.full(c1.q.expr)
            t2 = ev.full(c2.q.expr)
            if extra:
                axes = tuple(ev.axis[v] for v in extra)
                t2 = np.broadcast_to(t2.sum(axis=axes, keepdims=True), t2.shape)
            if not np.allclose(t1, t2, rtol=0, atol=1e-9):
                return False
        return True

    index = {c.id: i for i, c in enumerate(constraints)}
    result = list(constraints)
    for c1 in funcs:
        candidates = []
        for c2 in funcs:
            if c2 is c1 or not c1.q.scope <= c2.q.scope or not c1.extraneous <= c2.extraneous:
                continue
            if c1.q.scope == c2.q.scope and c1.q.divisor != c2.q.divisor:
                continue
            if c1.extraneous == c2.extraneous and c1.q.scope == c2.q.scope and index[c2.id] > index[c1.id]:
                continue
            if matches(c1, c2):
                candidates.append(c2)
        if candidates:
            best = min(
                candidates,
                key=lambda c2: (c2.q.scope != c1.q.scope, -len(c2.extraneous), index[c2.id]),
            )
            logger.debug("%s subsumed by %s", c1.id, best.id)
            result[index[c1.id]] = replace(c1, subsumed_by=best.id)
    return result
