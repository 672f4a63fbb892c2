"""Exact ground truth on small discrete models.

A :class:`DiscreteModel` attaches a conditional probability table to every
node of a latent DAG.  Observed joints and direct c-factors are obtained by
summing out hidden nodes exactly (``numpy.einsum``); symbolic expressions are
evaluated against the observed joint as broadcastable tables with one axis
per observed variable.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from math import prod
from typing import Union

import numpy as np

from .errors import PositivityError, StateSpaceTooLarge
from .graph import Graph, LatentDag, NodeId, as_latent, canonical, effective_parents, hidden_ancestors
from .qexpr import Factor, One, Product, QExpr, QTagged, Quotient, Sum, free_args

DEFAULT_STATE_CAP = 2**24
DENOMINATOR_FLOOR = 1e-15


@dataclass(frozen=True)
class Table:
    """Values indexed by assignments to ``variables`` (one axis each)."""

    variables: tuple[NodeId, ...]
    values: np.ndarray

    def at(self, assignment: Mapping[NodeId, int]) -> float:
        return float(self.values[tuple(assignment[v] for v in self.variables)])

    def expand(self, variables: Iterable[NodeId]) -> np.ndarray:
        """View over ``variables`` with size-1 axes for the ones this table lacks."""
        variables = tuple(variables)
        extra = [v for v in self.variables if v not in variables]
        if extra:
            raise ValueError(f"table depends on {extra} outside {variables}")
        src = [self.variables.index(v) for v in variables if v in self.variables]
        arr = np.transpose(self.values, src) if src else self.values.reshape(())
        shape = [self.values.shape[self.variables.index(v)] if v in self.variables else 1 for v in variables]
        return arr.reshape(shape)


class Distribution(Table):
    """Joint distribution over observed variables."""


@dataclass(frozen=True)
class DiscreteModel:
    graph: LatentDag
    domains: Mapping[NodeId, int]
    cpts: Mapping[NodeId, np.ndarray]  # axes: (node, *sorted parents)

    def state_space(self) -> int:
        return prod(self.domains[n] for n in self.graph.nodes)


def random_model(
    g: Graph,
    domains: Union[int, Mapping[NodeId, int]] = 2,
    seed=0,
    *,
    hidden_domain: int = 2,
    alpha: float = 1.0,
    epsilon: float = 1e-3,
) -> DiscreteModel:
    """Random strictly positive CPTs, deterministic in ``seed``.

    Each column is a symmetric Dirichlet draw mixed with the uniform floor:
    ``epsilon + (1 - k*epsilon) * dirichlet``, so every entry is at least
    ``epsilon`` and columns sum to one.
    """
    lg = as_latent(g)
    if isinstance(domains, int):
        sizes = {v: domains for v in lg.observed}
        sizes.update({u: hidden_domain for u in lg.hidden})
    else:
        sizes = {n: domains.get(n, hidden_domain if n in lg.hidden_set else 2) for n in lg.nodes}
    bad = sorted(n for n, k in sizes.items() if k < 2)
    if bad:
        raise ValueError(f"domain sizes must be at least 2 (got {bad})")
    rng = np.random.default_rng(seed)
    cpts = {}
    for n in canonical(lg.nodes):
        k = sizes[n]
        if k * epsilon >= 1:
            raise ValueError(f"epsilon {epsilon} too large for domain size {k}")
        pa_shape = tuple(sizes[p] for p in lg.parents[n])
        cols = rng.dirichlet(np.full(k, alpha), size=pa_shape or None)
        cols = epsilon + (1 - k * epsilon) * cols
        cpts[n] = np.moveaxis(np.asarray(cols), -1, 0)
    return DiscreteModel(lg, sizes, cpts)


def _check_cap(m: DiscreteModel, cap: int) -> None:
    size = m.state_space()
    if size > cap:
        raise StateSpaceTooLarge(f"model has {size} joint states; cap is {cap}")


def _q_values(m: DiscreteModel, nodes: Iterable[NodeId]) -> Table:
    """``Σ`` over hidden of the product of CPTs of ``nodes``; axes = observed nodes involved."""
    g = m.graph
    label = {n: i for i, n in enumerate(canonical(g.nodes))}
    operands = []
    involved: set[NodeId] = set()
    for n in canonical(nodes):
        axes = (n,) + g.parents[n]
        operands += [m.cpts[n], [label[a] for a in axes]]
        involved.update(axes)
    out = tuple(v for v in canonical(g.observed) if v in involved)
    if not operands:
        return Table((), np.array(1.0))
    values = np.einsum(*operands, [label[v] for v in out], optimize=True)
    return Table(out, values)


def observed_joint(m: DiscreteModel, cap: int = DEFAULT_STATE_CAP) -> Distribution:
    """``P(v)``: exact sum over all hidden configurations."""
    _check_cap(m, cap)
    t = _q_values(m, m.graph.nodes)
    variables = canonical(m.graph.observed)
    return Distribution(variables, t.expand(variables).copy())


def q_direct(m: DiscreteModel, s: Iterable[NodeId], *, reduced: bool = False, cap: int = DEFAULT_STATE_CAP) -> Table:
    """``Q[S]`` from the latent parameters, as a table over ``Pa+(S)``.

    By default every hidden node is summed out; ``reduced=True`` sums only
    over ``U(S)`` and uses only their CPTs.  The two agree because the
    remaining hidden factors sum to one.
    """
    _check_cap(m, cap)
    g = m.graph
    s = frozenset(s)
    hidden = hidden_ancestors(g, s) if reduced else g.hidden_set
    t = _q_values(m, s | hidden)
    args = canonical(effective_parents(g, s))
    # axes outside Pa+(S) only feed hidden factors that sum to one
    idx = tuple(slice(None) if v in args else 0 for v in t.variables)
    kept = tuple(v for v in t.variables if v in args)
    assert kept == args, (kept, args)
    return Table(args, np.asarray(t.values[idx], dtype=float))


class Evaluator:
    """Evaluates expressions against one observed joint, caching marginals."""

    def __init__(self, p: Distribution):
        self.p = p
        self.axis = {v: i for i, v in enumerate(p.variables)}
        self.sizes = dict(zip(p.variables, p.values.shape))
        self._marginals: dict[frozenset, np.ndarray] = {}
        self._tables: dict[QExpr, np.ndarray] = {}

    def marginal(self, variables: Iterable[NodeId]) -> np.ndarray:
        key = frozenset(variables)
        if key not in self._marginals:
            drop = tuple(i for v, i in self.axis.items() if v not in key)
            self._marginals[key] = self.p.values.sum(axis=drop, keepdims=True)
        return self._marginals[key]

    def table(self, e: QExpr) -> np.ndarray:
        if e not in self._tables:
            self._tables[e] = self._compute(e)
        return self._tables[e]

    def _compute(self, e: QExpr) -> np.ndarray:
        if isinstance(e, One):
            return np.ones((1,) * len(self.axis))
        if isinstance(e, Factor):
            den = self.marginal(e.given)
            if den.min() < DENOMINATOR_FLOOR:
                raise PositivityError(f"P({','.join(e.given)}) vanishes")
            return self.marginal((e.child, *e.given)) / den
        if isinstance(e, Product):
            out = self.table(e.terms[0])
            for t in e.terms[1:]:
                out = out * self.table(t)
            return out
        if isinstance(e, Sum):
            out = self.table(e.body)
            for v in e.over:
                ax = self.axis[v]
                if out.shape[ax] == 1:
                    out = out * self.sizes[v]
                else:
                    out = out.sum(axis=ax, keepdims=True)
            return out
        if isinstance(e, Quotient):
            den = self.table(e.den)
            if np.min(np.abs(den)) < DENOMINATOR_FLOOR:
                raise PositivityError("quotient denominator vanishes")
            return self.table(e.num) / den
        raise TypeError(f"not an expression: {e!r}")

    def full(self, e: QExpr) -> np.ndarray:
        return np.broadcast_to(self.table(e), self.p.values.shape)


def eval_table(e: QExpr, p: Distribution) -> np.ndarray:
    """Value of ``e`` at every assignment, broadcastable against ``p.values``."""
    return Evaluator(p).table(e)


def eval_qexpr(e: QExpr, p: Distribution, assignment: Mapping[NodeId, int]) -> float:
    missing = sorted(free_args(e) - set(assignment))
    if missing:
        raise KeyError(f"assignment lacks {missing}")
    t = eval_table(e, p)
    idx = tuple(assignment[v] if t.shape[i] > 1 else 0 for i, v in enumerate(p.variables))
    return float(t[idx])


def q_tagged_direct(m: DiscreteModel, q: QTagged, variables: Iterable[NodeId]) -> np.ndarray:
    """Ground truth for ``q`` (a c-factor or a ratio of two) over ``variables``."""
    variables = tuple(variables)
    val = q_direct(m, q.scope).expand(variables)
    if q.divisor is not None:
        val = val / q_direct(m, q.divisor).expand(variables)
    return val


@dataclass(frozen=True)
class VerificationReport:
    max_deviation: float
    holds: bool


def ci_deviation(p: Distribution, x: NodeId, others: Iterable[NodeId], given: Iterable[NodeId]) -> float:
    """Largest change of ``P(x | others, given)`` as ``others`` vary."""
    ev = Evaluator(p)
    others, given = frozenset(others), frozenset(given)
    cond = ev.marginal(others | given | {x}) / ev.marginal(others | given)
    axes = tuple(ev.axis[v] for v in others)
    if not axes:
        return 0.0
    return float(np.ptp(cond, axis=axes).max())


def verify_constraint(c, m_or_p: Union[DiscreteModel, Distribution], tol: float = 1e-9) -> VerificationReport:
    """Check a derived constraint numerically.

    Functional constraints: the expression's range over its extraneous
    variables, maximized over all other assignments.  Conditional
    independencies: range of ``P(x | others, given)`` over ``others``.
    """
    p = m_or_p if isinstance(m_or_p, Distribution) else observed_joint(m_or_p)
    if c.kind == "conditional_independence":
        dev = ci_deviation(p, c.x, c.others, c.given)
    else:
        ev = Evaluator(p)
        t = ev.full(c.q.expr)
        axes = tuple(ev.axis[v] for v in c.extraneous)
        dev = float(np.ptp(t, axis=axes).max()) if axes else 0.0
    return VerificationReport(dev, dev <= tol)
