"""Command-line front end.

Usage::

    verma-kit components graphs/fig1a.txt
    verma-kit project graphs/fig2.txt
    verma-kit find graphs/fig4a.txt --dedup numeric --format machine
    verma-kit verify graphs/fig1a.txt --trials 50 --seed 7

``verify`` exits with status 1 when any derived constraint fails on any
model; parse errors and other input problems exit with status 2.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import ComponentTooLarge, GraphError, StateSpaceTooLarge
from .finder import CI, FinderConfig, run_search
from .graph import Admg, Graph, admg_c_components, c_components, format_set, project
from .oracle import observed_joint, random_model, verify_constraint
from .parser import format_graph, graph_hash, parse_graph
from .report import dumps, machine_document, text_report


@dataclass(frozen=True)
class RunConfig:
    path: Path
    command: str
    seed: int = 0
    trials: int = 50
    domain_size: int = 2
    hidden_domain_size: int = 2
    tolerance: float = 1e-9
    order_mode: str = "canonical"
    order_cap: int = 24
    max_component_size: int = 16
    dedup: str = "none"
    output: str = "text"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def finder_config(self) -> FinderConfig:
        return FinderConfig(
            order_mode=self.order_mode,
            order_cap=self.order_cap,
            max_component_size=self.max_component_size,
            dedup=self.dedup,
        )


def _load(path: Path) -> Graph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def cmd_components(path: Path) -> str:
    g = _load(path)
    blocks = admg_c_components(g) if isinstance(g, Admg) else c_components(g)
    return " ".join(format_set(b) for b in blocks) + "\n"


def cmd_project(path: Path) -> str:
    g = _load(path)
    if isinstance(g, Admg):
        raise GraphError("input already has bidirected edges; nothing to project")
    return format_graph(project(g))


def cmd_find(cfg: RunConfig) -> str:
    g = _load(cfg.path)
    fcfg = cfg.finder_config()
    result = run_search(g, fcfg)
    if cfg.output == "machine":
        return dumps(machine_document(g, result, fcfg))
    return text_report(result)


def cmd_verify(cfg: RunConfig) -> tuple[str, bool]:
    g = _load(cfg.path)
    fcfg = cfg.finder_config()
    result = run_search(g, fcfg)
    joints = [
        observed_joint(random_model(g, cfg.domain_size, [cfg.seed, t], hidden_domain=cfg.hidden_domain_size))
        for t in range(cfg.trials)
    ]
    rows = []
    all_ok = True
    for c in result.constraints:
        reports = [verify_constraint(c, p, cfg.tolerance) for p in joints]
        worst = max(r.max_deviation for r in reports)
        passed = sum(r.holds for r in reports)
        ok = passed == len(reports)
        all_ok &= ok
        rows.append((c, worst, passed, ok))

    if cfg.output == "machine":
        doc = {
            "metadata": {
                "graph_hash": graph_hash(g),
                "seed": cfg.seed,
                "trials": cfg.trials,
                "domain_size": cfg.domain_size,
                "hidden_domain_size": cfg.hidden_domain_size,
                "tolerance": cfg.tolerance,
            },
            "results": [
                {
                    "id": c.id,
                    "kind": c.kind,
                    "statement": c.statement(),
                    "max_deviation": worst,
                    "models_passed": passed,
                    "holds": ok,
                }
                for c, worst, passed, ok in rows
            ],
            "all_hold": all_ok,
        }
        return dumps(doc), all_ok

    lines = [f"{cfg.trials} random models (seed {cfg.seed}, domain size {cfg.domain_size}), tolerance {cfg.tolerance:g}"]
    for c, worst, passed, ok in rows:
        tag = "PASS" if ok else "FAIL"
        kind = "CI" if c.kind == CI else "functional"
        lines.append(f"[{c.id}] {tag} max_deviation={worst:.3e} ({passed}/{cfg.trials}) {kind}: {c.statement()}")
    lines.append("all constraints hold" if all_ok else "SOME CONSTRAINTS FAILED")
    return "\n".join(lines) + "\n", all_ok


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _domain(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("domain size must be at least 2")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verma-kit",
        description="Find and verify the testable constraints of causal graphs with hidden variables.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("components", help="print the c-component partition", formatter_class=fmt)
    p.add_argument("file", type=Path)

    p = sub.add_parser("project", help="print the latent projection as an ADMG file", formatter_class=fmt)
    p.add_argument("file", type=Path)

    for name, help_text in (("find", "derive constraints"), ("verify", "derive and verify constraints")):
        p = sub.add_parser(name, help=help_text, formatter_class=fmt)
        p.add_argument("file", type=Path)
        p.add_argument("--orders", choices=("canonical", "all"), default="canonical",
                       help="topological orders to search")
        p.add_argument("--order-cap", type=_positive_int, default=24,
                       help="maximum number of orders with --orders all")
        p.add_argument("--max-component-size", type=_positive_int, default=16,
                       help="largest c-component the search will enter")
        p.add_argument("--dedup", choices=("none", "numeric"), default="none",
                       help="annotate subsumed functional constraints")
        p.add_argument("--format", choices=("text", "machine"), default="text", help="output format")
        if name == "verify":
            p.add_argument("--seed", type=int, default=0, help="seed for the random models")
            p.add_argument("--trials", type=_positive_int, default=50, help="number of random models")
            p.add_argument("--domain-size", type=_domain, default=2, help="observed domain size")
            p.add_argument("--hidden-domain-size", type=_domain, default=2, help="hidden domain size")
            p.add_argument("--tol", type=_positive_float, default=1e-9, help="tolerance")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(sys.stdout, "reconfigure"):
        sys.stdout.reconfigure(encoding="utf-8")
    try:
        if args.command == "components":
            sys.stdout.write(cmd_components(args.file))
            return 0
        if args.command == "project":
            sys.stdout.write(cmd_project(args.file))
            return 0
        cfg = RunConfig(
            path=args.file,
            command=args.command,
            order_mode=args.orders,
            order_cap=args.order_cap,
            max_component_size=args.max_component_size,
            dedup=args.dedup,
            output=args.format,
            **(
                dict(
                    seed=args.seed,
                    trials=args.trials,
                    domain_size=args.domain_size,
                    hidden_domain_size=args.hidden_domain_size,
                    tolerance=args.tol,
                )
                if args.command == "verify"
                else {}
            ),
        )
        if args.command == "find":
            sys.stdout.write(cmd_find(cfg))
            return 0
        out, ok = cmd_verify(cfg)
        sys.stdout.write(out)
        return 0 if ok else 1
    except FileNotFoundError as exc:
        print(f"verma-kit: {exc}", file=sys.stderr)
        return 2
    except (GraphError, ComponentTooLarge, StateSpaceTooLarge) as exc:
        print(f"verma-kit: {args.file}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
