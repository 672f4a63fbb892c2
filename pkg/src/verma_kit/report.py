"""Text and machine (JSON) renderings of search and verification results.

Machine documents have the shape::

    {
      "metadata": {"graph_hash", "graph_type", "order", "orders", "config"},
      "constraints": [
        {"id", "kind", "rendered_expression", "quantity", "scope",
         "claimed_args", "extraneous", "x", "others", "given",
         "derivation": [{"step", "equation", "detail", "scope_before", "scope_after"}],
         "subsumed_by", "orders"}
      ]
    }

Keys appear in exactly that order.  Fields that do not apply to a constraint
kind are ``null``; variable sets are sorted lists of node names.
"""

from __future__ import annotations

import json
from dataclasses import asdict

from .finder import CI, Constraint, FinderConfig, SearchResult
from .graph import Graph, LatentDag, canonical, format_set
from .parser import graph_hash


def _names(s) -> list[str] | None:
    return None if s is None else list(canonical(s))


def constraint_record(c: Constraint) -> dict:
    functional = c.kind != CI
    return {
        "id": c.id,
        "kind": c.kind,
        "rendered_expression": c.rendered if functional else None,
        "quantity": c.q.describe() if functional else None,
        "scope": _names(c.q.scope) if functional else None,
        "claimed_args": _names(c.q.claimed_args) if functional else None,
        "extraneous": _names(c.extraneous) if functional else None,
        "x": None if functional else c.x,
        "others": None if functional else _names(c.others),
        "given": None if functional else _names(c.given),
        "derivation": [
            {
                "step": s.step,
                "equation": s.equation,
                "detail": s.detail,
                "scope_before": _names(s.scope_before),
                "scope_after": _names(s.scope_after),
            }
            for s in c.derivation
        ],
        "subsumed_by": c.subsumed_by,
        "orders": [list(o) for o in c.orders],
    }


def machine_document(g: Graph, result: SearchResult, cfg: FinderConfig) -> dict:
    return {
        "metadata": {
            "graph_hash": graph_hash(g),
            "graph_type": "latent_dag" if isinstance(g, LatentDag) else "admg",
            "order": list(result.orders[0]) if result.orders else [],
            "orders": [list(o) for o in result.orders],
            "config": asdict(cfg),
        },
        "constraints": [constraint_record(c) for c in result.constraints],
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def text_report(result: SearchResult) -> str:
    lines = []
    for order in result.orders:
        lines.append("order: " + " < ".join(order))
    n_ci = sum(c.kind == CI for c in result.constraints)
    lines.append(
        f"{len(result.constraints)} constraints "
        f"({n_ci} conditional independence, {len(result.constraints) - n_ci} functional)"
    )
    for c in result.constraints:
        lines.append("")
        lines.append(f"[{c.id}] {c.kind}: {c.statement()}")
        if c.kind != CI:
            lines.append(f"    equals {c.q.describe()}, a function of {format_set(c.q.claimed_args)}")
        if c.subsumed_by:
            lines.append(f"    subsumed by {c.subsumed_by}")
        for s in c.derivation:
            lines.append(f"    - {s.step}: {s.equation}")
            if s.detail:
                lines.append(f"        {s.detail}")
    return "\n".join(lines) + "\n"
