"""Symbolic c-factors: expression trees over observed conditionals.

Expressions are immutable and always built through the ``make_*`` helpers,
which take the topological order in force so that conditioning lists, product
terms and summation indices come out in a single canonical arrangement.  The
only rewriting performed is the sum-to-one rule::

    Σ_x [ A * P(x|rest) ]  ->  A        (x not free in A or rest)
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .errors import PreconditionError
from .graph import (
    Graph,
    NodeId,
    c_components,
    component_of,
    effective_parents,
    format_set,
    is_ancestral,
    is_topological_order,
    topological_order,
)


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Factor:
    child: NodeId
    given: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class Product:
    terms: tuple["QExpr", ...]


@dataclass(frozen=True)
class Sum:
    over: tuple[NodeId, ...]
    body: "QExpr"


@dataclass(frozen=True)
class Quotient:
    num: "QExpr"
    den: "QExpr"


QExpr = Union[One, Factor, Product, Sum, Quotient]
ONE = One()


@lru_cache(maxsize=None)
def free_args(e: QExpr) -> frozenset[NodeId]:
    """Variables occurring in ``e`` outside every enclosing summation."""
    if isinstance(e, One):
        return frozenset()
    if isinstance(e, Factor):
        return frozenset(e.given) | {e.child}
    if isinstance(e, Product):
        return frozenset().union(*(free_args(t) for t in e.terms))
    if isinstance(e, Sum):
        return free_args(e.body) - frozenset(e.over)
    if isinstance(e, Quotient):
        return free_args(e.num) | free_args(e.den)
    raise TypeError(f"not an expression: {e!r}")


@lru_cache(maxsize=None)
def render(e: QExpr) -> str:
    if isinstance(e, One):
        return "1"
    if isinstance(e, Factor):
        child = e.child.lower()
        if not e.given:
            return f"P({child})"
        return f"P({child}|{','.join(v.lower() for v in e.given)})"
    if isinstance(e, Product):
        return " * ".join(f"( {render(t)} )" if isinstance(t, Quotient) else render(t) for t in e.terms)
    if isinstance(e, Sum):
        return f"Σ_{{{','.join(v.lower() for v in e.over)}}}[ {render(e.body)} ]"
    if isinstance(e, Quotient):
        return f"( {render(e.num)} ) / ( {render(e.den)} )"
    raise TypeError(f"not an expression: {e!r}")


def _rank(order: Sequence[NodeId]) -> dict[NodeId, int]:
    return {v: i for i, v in enumerate(order)}


def make_factor(child: NodeId, given: Iterable[NodeId], order: Sequence[NodeId]) -> Factor:
    rank = _rank(order)
    given = sorted(set(given) - {child}, key=lambda v: -rank[v])
    return Factor(child, tuple(given))


def _term_key(term: QExpr, rank: Mapping[NodeId, int]):
    if isinstance(term, Factor):
        head = rank[term.child]
    else:
        head = max((rank[v] for v in free_args(term)), default=-1)
    return (-head, render(term))


def make_product(terms: Iterable[QExpr], order: Sequence[NodeId]) -> QExpr:
    flat: list[QExpr] = []
    for t in terms:
        if isinstance(t, Product):
            flat.extend(t.terms)
        elif not isinstance(t, One):
            flat.append(t)
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    rank = _rank(order)
    return Product(tuple(sorted(flat, key=lambda t: _term_key(t, rank))))


def make_quotient(num: QExpr, den: QExpr) -> QExpr:
    if isinstance(den, One):
        return num
    return Quotient(num, den)


def make_sum(over: Iterable[NodeId], body: QExpr, order: Sequence[NodeId]) -> QExpr:
    """Sum ``body`` over ``over``, merging nested sums and dropping factors that sum to one."""
    over = set(over)
    if not over:
        return body
    missing = over - free_args(body)
    if missing:
        raise PreconditionError(f"summation over {format_set(missing)} which does not occur in the body")
    if isinstance(body, Sum):
        over |= set(body.over)
        body = body.body
    terms = list(body.terms) if isinstance(body, Product) else [body]
    changed = True
    while changed:
        changed = False
        for x in sorted(over):
            holders = [t for t in terms if x in free_args(t)]
            if len(holders) == 1 and isinstance(holders[0], Factor) and holders[0].child == x:
                terms.remove(holders[0])
                over.discard(x)
                changed = True
    body = make_product(terms, order)
    if not over:
        return body
    rank = _rank(order)
    return Sum(tuple(sorted(over, key=rank.__getitem__)), body)


@dataclass(frozen=True)
class QTagged:
    """A computed c-factor together with the arguments it is known to depend on.

    The represented quantity is ``Q[scope]``, or ``Q[scope] / Q[divisor]`` when
    ``divisor`` is set.
    """

    expr: QExpr
    scope: frozenset[NodeId]
    claimed_args: frozenset[NodeId]
    order: tuple[NodeId, ...]
    divisor: Optional[frozenset[NodeId]] = None

    @property
    def extraneous(self) -> frozenset[NodeId]:
        return free_args(self.expr) - self.claimed_args

    def describe(self) -> str:
        q = f"Q[{format_set(self.scope)}]"
        if self.divisor is not None:
            q += f" / Q[{format_set(self.divisor)}]"
        return q


def conditional_factor(g: Graph, order: Sequence[NodeId], i: int) -> Factor:
    """``P(v_i | v^(i-1))`` reduced to ``P(v_i | Pa+(T_i) \\ {v_i})``, ``T_i`` the
    c-component of ``v_i`` in ``G(V^(i))``."""
    v = order[i]
    component = component_of(g, v, order[: i + 1])
    return make_factor(v, effective_parents(g, component), order)


def c_factor(g: Graph, component: Iterable[NodeId], order: Sequence[NodeId]) -> QTagged:
    """``Q[S]`` for a c-component ``S`` of some prefix ``G(V^(i))`` of ``order``."""
    component = frozenset(component)
    order = tuple(order)
    terms = [conditional_factor(g, order, i) for i, v in enumerate(order) if v in component]
    return QTagged(make_product(terms, order), component, effective_parents(g, component), order)


def q_factorize(g: Graph, order: Sequence[NodeId] | None = None) -> dict[frozenset[NodeId], QTagged]:
    """c-factors of every c-component of ``g``, read off the chain rule along ``order``."""
    order = topological_order(g) if order is None else tuple(order)
    if not is_topological_order(g, order):
        raise PreconditionError(f"{order} is not a topological order of the observed nodes")
    return {s: c_factor(g, s, order) for s in c_components(g)}


def lemma1_marginalize(q: QTagged, g: Graph, w: Iterable[NodeId]) -> QTagged:
    """``Q[W] = Σ_{C \\ W} Q[C]``, valid when ``W`` is ancestral in ``G(C)``."""
    w = frozenset(w)
    if q.divisor is not None:
        raise PreconditionError("cannot marginalize a ratio of c-factors")
    if not w <= q.scope:
        raise PreconditionError(f"{format_set(w)} is not a subset of {format_set(q.scope)}")
    if w == q.scope:
        return q
    if not is_ancestral(g, w, q.scope):
        raise PreconditionError(
            f"{format_set(w)} is not an ancestral set in G({format_set(q.scope)})"
        )
    expr = make_sum(q.scope - w, q.expr, q.order)
    return QTagged(expr, w, effective_parents(g, w), q.order)


def lemma2_decompose(q: QTagged, g: Graph) -> dict[frozenset[NodeId], QTagged]:
    """Split ``Q[H]`` into the c-factors of the c-components of ``G(H)``.

    Uses the canonical topological order of ``H`` in ``G(H)``: every prefix
    ``H^(i)`` is ancestral, so ``Q[H^(i)]`` is a marginal of ``Q[H]`` and each
    component is the product of its members' successive ratios.
    """
    comps = c_components(g, q.scope)
    if len(comps) == 1:
        return {q.scope: q}
    local = topological_order(g, q.scope)
    prefixes = [ONE] + [lemma1_marginalize(q, g, local[: i + 1]).expr for i in range(len(local))]
    ratio = {v: make_quotient(prefixes[i + 1], prefixes[i]) for i, v in enumerate(local)}
    out = {}
    for comp in comps:
        expr = make_product((ratio[v] for v in local if v in comp), q.order)
        out[comp] = QTagged(expr, comp, effective_parents(g, comp), q.order)
    return out
