"""Read and write the line-oriented graph file format.

::

    # four observed nodes, one hidden confounder
    observed A B C D
    hidden U
    edge A -> B
    edge U -> B

ADMG files use ``biedge X <-> Y`` instead of ``hidden``; mixing the two is an
error.  A file with neither is read as a latent DAG without hidden nodes.
"""

from __future__ import annotations

import hashlib
import re

from .errors import ParseError
from .graph import Admg, Graph, LatentDag, canonical

_NAME = re.compile(r"[A-Za-z0-9_]+\Z")


def _check_name(name: str, line: int) -> str:
    if not _NAME.match(name):
        raise ParseError(f"invalid node name {name!r}", line)
    return name


def parse_graph(text: str) -> Graph:
    declared: dict[str, tuple[str, int]] = {}
    observed: list[str] = []
    hidden: list[str] = []
    arrows: list[tuple[str, str, int]] = []
    biarrows: list[tuple[str, str, int]] = []
    first_hidden = first_biedge = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *rest = line.split()
        if keyword in ("observed", "hidden"):
            if not rest:
                raise ParseError(f"'{keyword}' needs at least one name", lineno)
            if keyword == "hidden" and first_hidden is None:
                first_hidden = lineno
            for name in rest:
                _check_name(name, lineno)
                if name in declared:
                    prev = declared[name][1]
                    raise ParseError(f"node {name} already declared on line {prev}", lineno)
                declared[name] = (keyword, lineno)
                (observed if keyword == "observed" else hidden).append(name)
        elif keyword == "edge":
            if len(rest) != 3 or rest[1] != "->":
                raise ParseError("expected 'edge <name> -> <name>'", lineno)
            arrows.append((_check_name(rest[0], lineno), _check_name(rest[2], lineno), lineno))
        elif keyword == "biedge":
            if len(rest) != 3 or rest[1] != "<->":
                raise ParseError("expected 'biedge <name> <-> <name>'", lineno)
            if first_biedge is None:
                first_biedge = lineno
            biarrows.append((_check_name(rest[0], lineno), _check_name(rest[2], lineno), lineno))
        else:
            raise ParseError(f"unknown keyword {keyword!r}", lineno)

    if first_hidden is not None and first_biedge is not None:
        raise ParseError(
            f"file mixes 'hidden' (line {first_hidden}) and 'biedge' declarations",
            max(first_hidden, first_biedge),
        )

    children: dict[str, set[str]] = {n: set() for n in declared}

    def reaches(src: str, dst: str) -> bool:
        stack, seen = [src], {src}
        while stack:
            n = stack.pop()
            if n == dst:
                return True
            for c in children[n]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    edges: set[tuple[str, str]] = set()
    for a, b, lineno in arrows:
        for n in (a, b):
            if n not in declared:
                raise ParseError(f"edge uses undeclared node {n}", lineno)
        if a == b:
            raise ParseError(f"self-loop on {a}", lineno)
        if (a, b) in edges:
            raise ParseError(f"duplicate edge {a} -> {b}", lineno)
        if reaches(b, a):
            raise ParseError(f"edge {a} -> {b} closes a directed cycle", lineno)
        edges.add((a, b))
        children[a].add(b)

    bi: set[tuple[str, str]] = set()
    for a, b, lineno in biarrows:
        for n in (a, b):
            if n not in declared:
                raise ParseError(f"biedge uses undeclared node {n}", lineno)
        if a == b:
            raise ParseError(f"bidirected self-loop on {a}", lineno)
        key = (min(a, b), max(a, b))
        if key in bi:
            raise ParseError(f"duplicate biedge {a} <-> {b}", lineno)
        bi.add(key)

    try:
        if biarrows:
            return Admg(tuple(observed), frozenset(edges), frozenset(bi))
        return LatentDag(tuple(observed), tuple(hidden), frozenset(edges))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def format_graph(g: Graph) -> str:
    """Canonical file text; ``parse_graph(format_graph(g))`` reproduces ``g`` up to ordering."""
    lines = []
    if g.observed:
        lines.append("observed " + " ".join(canonical(g.observed)))
    if isinstance(g, LatentDag):
        if g.hidden:
            lines.append("hidden " + " ".join(canonical(g.hidden)))
        directed, bidirected = g.edges, frozenset()
    else:
        directed, bidirected = g.directed, g.bidirected
    lines.extend(f"edge {a} -> {b}" for a, b in sorted(directed))
    lines.extend(f"biedge {a} <-> {b}" for a, b in sorted(bidirected))
    return "\n".join(lines) + "\n"


def graph_hash(g: Graph) -> str:
    return hashlib.sha256(format_graph(g).encode()).hexdigest()
