"""Testable constraints of causal DAGs with hidden variables."""

from .errors import ComponentTooLarge, GraphError, ParseError, PositivityError, PreconditionError, StateSpaceTooLarge
from .finder import Constraint, FinderConfig, SearchResult, find_constraints, run_search, subsumption_annotate
from .graph import (
    Admg,
    LatentDag,
    admg_c_components,
    all_topological_orders,
    ancestral_closure,
    c_components,
    d_separated,
    descendant_closure,
    effective_parents,
    hidden_ancestors,
    prune_hidden_nonancestors,
    project,
    topological_order,
)
from .oracle import DiscreteModel, Distribution, eval_qexpr, observed_joint, q_direct, random_model, verify_constraint
from .parser import format_graph, parse_graph
from .qexpr import QTagged, free_args, lemma1_marginalize, lemma2_decompose, q_factorize, render

__version__ = "0.1.0"
