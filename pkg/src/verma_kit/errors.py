"""Exception types raised across the package."""

from __future__ import annotations


class GraphError(ValueError):
    """A graph violates a structural invariant (cycle, undeclared node, ...)."""


class ParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class PreconditionError(ValueError):
    """An operation was called outside the conditions that make it valid."""


class ComponentTooLarge(ValueError):
    def __init__(self, component, limit: int):
        self.component = frozenset(component)
        self.limit = limit
        members = ",".join(sorted(self.component))
        super().__init__(
            f"component {{{members}}} has {len(self.component)} nodes; "
            f"descendent-set enumeration is capped at {limit}"
        )


class StateSpaceTooLarge(ValueError):
    pass


class PositivityError(ArithmeticError):
    pass
