"""Command line front end.

Subcommands: check (validate files), run (reduce to normal form), step
(reduce a bounded number of passes), trace (tab-separated firing log),
rho (compile a term, optionally reduce it), bench (compare strategies),
corpus (bundled example files).  run/trace/bench accept --plot to render
a matplotlib figure next to their text output.

Exit codes: 0 success, 1 bad input (parse, validation or rule errors),
2 a reduction hit its pass or interaction limit.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from typing import Optional, Sequence

from .core import (
    Agent,
    Binet,
    InvalidBinetError,
    interface,
    sorted_binet,
    validate,
)
from .engine import (
    DETERMINISTIC,
    STOCHASTIC,
    WEIGHTED,
    EngineError,
    ReductionTrace,
    StepLimitExceeded,
    Strategy,
    reduce,
    trace_tsv,
)
from .rho import RhoError, compile_rho, parse_rho, rho_rules
from .rules import RuleSet, check_ruleset
from .syntax import ParseError, parse_binet, parse_rules, print_binet

RULES_ENV = "BINET_RULES"
_BUNDLED_RULES = {"rho": "rho.rules", "rho-naive": "rho_naive.rules", "nat": "nat.rules"}


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}")


def _load_net(path: str) -> Binet:
    return parse_binet(_read_text(path))


def _load_rules(spec: Optional[str]) -> RuleSet:
    spec = spec or os.environ.get(RULES_ENV)
    if not spec:
        raise CliError(
            "no rules given: pass --rules FILE (or a bundled name: "
            + ", ".join(sorted(_BUNDLED_RULES))
            + f"), or set ${RULES_ENV}"
        )
    if spec in _BUNDLED_RULES:
        text = (
            resources.files("binets.corpus")
            .joinpath(_BUNDLED_RULES[spec])
            .read_text("utf-8")
        )
        return parse_rules(text)
    return parse_rules(_read_text(spec))


def _strategy(args: argparse.Namespace) -> Strategy:
    kind = args.strategy
    seed = args.seed
    if kind == STOCHASTIC and seed is None:
        seed = 0
    return Strategy(kind, seed if kind == STOCHASTIC else None, not args.single_redex)


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


# ---------------------------------------------------------------------------
# dot export


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(binet: Binet, name: str = "binet") -> str:
    """Graphviz text for a net.

    Every agent is a node (a labelled cluster when it is a box, i.e. has
    nested children or internal ports); every shared label becomes one edge
    whose principal ends carry a dot arrowhead; labels used once dangle to a
    point node so the interface stays visible.
    """
    binet = sorted_binet(binet)
    out = [f"digraph {_dot_quote(name)} {{"]
    out.append("  rankdir=LR;")
    out.append('  node [shape=box, style=rounded, fontname="Helvetica"];')
    out.append('  edge [dir=both, arrowsize=0.7, fontsize=10, fontname="Helvetica"];')
    ports: dict[str, list[tuple[str, bool]]] = {}
    agent_count = 0

    def add_port(label: str, node: str, principal: bool) -> None:
        ports.setdefault(label, []).append((node, principal))

    def emit(agent: Agent, path: tuple[int, ...], indent: str) -> None:
        nonlocal agent_count
        agent_count += 1
        node = "a" + "_".join(str(i) for i in path)
        boxed = agent.children or agent.symbol.internal_arity
        if boxed:
            out.append(f"{indent}subgraph cluster_{node} {{")
            out.append(f'{indent}  style=rounded; color="#888888";')
            inner = indent + "  "
        else:
            inner = indent
        out.append(f"{inner}{node} [label={_dot_quote(agent.symbol.name)}];")
        add_port(agent.principal, node, True)
        for label in agent.external:
            add_port(label, node, False)
        for label in agent.internal:
            add_port(label, node, False)
        for i, child in enumerate(agent.children):
            emit(child, path + (i,), inner)
        if boxed:
            out.append(f"{indent}}}")

    for i, agent in enumerate(binet.agents):
        emit(agent, (i,), "  ")

    def end_node(label: str) -> tuple[str, bool]:
        if ports.get(label):
            return ports[label].pop(0)
        point = f"port_{label}"
        out.append(
            f"  {point} [shape=point, width=0.08, xlabel={_dot_quote(label)}];"
        )
        return point, False

    def emit_edge(label: str, a: tuple[str, bool], b: tuple[str, bool]) -> None:
        tail = "dot" if a[1] else "none"
        head = "dot" if b[1] else "none"
        out.append(
            f"  {a[0]} -> {b[0]} [label={_dot_quote(label)},"
            f" arrowtail={tail}, arrowhead={head}];"
        )

    for wire in binet.wires:
        emit_edge(f"{wire.a}-{wire.b}", end_node(wire.a), end_node(wire.b))
    for label in sorted(ports):
        while ports[label]:
            first = ports[label].pop(0)
            second = end_node(label)
            emit_edge(label, first, second)
    out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# plots


def _save_figure(fig, path: str) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight")


def _plot_trace(trace: ReductionTrace, path: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    indexes = [r.index + 1 for r in trace.passes]
    fired = [len(r.firings) for r in trace.passes]
    active = [r.active_candidates for r in trace.passes]
    inactive = [r.inactive_candidates for r in trace.passes]
    sizes = [sum(1 for _ in s.walk()) for s in trace.snapshots]

    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 6))
    top.bar(indexes, fired, color="#4878cf", label="fired")
    top.plot(indexes, active, "o-", color="#d65f5f", label="active candidates")
    if any(inactive):
        top.plot(indexes, inactive, "s--", color="#6acc65", label="inactive candidates")
    top.set_xlabel("pass")
    top.set_ylabel("count")
    top.set_title(title)
    top.legend(loc="best")
    top.set_xticks(indexes)

    bottom.plot(range(len(sizes)), sizes, "o-", color="#4878cf", label="agents")
    cumulative = [0] + [r.interactions_after for r in trace.passes]
    bottom.plot(
        range(len(cumulative)), cumulative, "s--", color="#ee854a",
        label="interactions so far",
    )
    bottom.set_xlabel("pass (0 = input)")
    bottom.set_ylabel("count")
    bottom.legend(loc="best")
    bottom.set_xticks(range(len(sizes)))
    fig.tight_layout()
    _save_figure(fig, path)
    plt.close(fig)


def _plot_bench(rows: list[dict], path: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    colors = {DETERMINISTIC: "#4878cf", WEIGHTED: "#6acc65", STOCHASTIC: "#d65f5f"}
    labels = [
        row["strategy"] if row["seed"] == "-" else f'{row["strategy"]}/{row["seed"]}'
        for row in rows
    ]
    xs = range(len(rows))
    ax.bar(
        xs,
        [row["interactions"] for row in rows],
        color=[colors.get(row["strategy"], "#888888") for row in rows],
        label="interactions",
    )
    ax.plot(xs, [row["passes"] for row in rows], "ko-", label="passes")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("count")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    _save_figure(fig, path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# subcommands


def _report_trace(trace: ReductionTrace, args: argparse.Namespace) -> None:
    if getattr(args, "snapshots", None):
        os.makedirs(args.snapshots, exist_ok=True)
        for i, snap in enumerate(trace.snapshots):
            with open(
                os.path.join(args.snapshots, f"pass_{i:03d}.binet"),
                "w",
                encoding="utf-8",
            ) as handle:
                handle.write(print_binet(snap))
    if getattr(args, "dot", None):
        _write_text(args.dot, export_dot(trace.normal_form))
    if getattr(args, "plot", None):
        _plot_trace(trace, args.plot, title=f"reduction of {args.net}")


def _stats_lines(trace: ReductionTrace) -> str:
    lines = [
        f"# passes\t{len(trace.passes)}",
        f"# interactions\t{trace.interactions}",
        f"# termination\t{trace.termination}",
    ]
    if trace.detail:
        lines.append(f"# detail\t{trace.detail}")
    return "\n".join(lines) + "\n"


def cmd_check(args: argparse.Namespace) -> int:
    failures = 0
    if args.rules:
        ruleset = _load_rules(args.rules)
        report = check_ruleset(ruleset)
        if report.ok:
            print(f"rules: ok ({len(ruleset.rules)} rules)")
        else:
            failures += len(report.violations)
            for violation in report.violations:
                print(f"rules: {violation}")
    for path in args.nets:
        try:
            net = parse_binet(_read_text(path), validate=False)
        except ParseError as exc:
            failures += 1
            print(f"{path}: {exc}")
            continue
        report = validate(net)
        if report.ok:
            ports = ", ".join(sorted(interface(net))) or "(closed)"
            agents = sum(1 for _ in net.walk())
            noun = "agent" if agents == 1 else "agents"
            print(f"{path}: ok ({agents} {noun}, interface {ports})")
        else:
            failures += len(report.violations)
            for violation in report.violations:
                print(f"{path}: {violation}")
    return 1 if failures else 0


def _run_reduction(args: argparse.Namespace, net: Binet, ruleset: RuleSet):
    limited = None
    try:
        trace = reduce(
            net,
            ruleset,
            strategy=_strategy(args),
            max_passes=args.max_passes,
            max_steps=args.max_steps,
        )
    except StepLimitExceeded as exc:
        trace = exc.trace
        limited = exc
    return trace, limited


def cmd_run(args: argparse.Namespace) -> int:
    net = _load_net(args.net)
    ruleset = _load_rules(args.rules)
    trace, limited = _run_reduction(args, net, ruleset)
    sys.stdout.write(print_binet(trace.normal_form))
    sys.stdout.write(_stats_lines(trace))
    _report_trace(trace, args)
    return 2 if limited else 0


def cmd_step(args: argparse.Namespace) -> int:
    net = _load_net(args.net)
    ruleset = _load_rules(args.rules)
    args.max_passes = args.passes
    args.max_steps = None
    trace, _limited = _run_reduction(args, net, ruleset)
    sys.stdout.write(print_binet(trace.normal_form))
    sys.stdout.write(_stats_lines(trace))
    _report_trace(trace, args)
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    net = _load_net(args.net)
    ruleset = _load_rules(args.rules)
    trace, limited = _run_reduction(args, net, ruleset)
    sys.stdout.write(trace_tsv(trace))
    sys.stdout.write(_stats_lines(trace))
    _report_trace(trace, args)
    return 2 if limited else 0


def cmd_rho(args: argparse.Namespace) -> int:
    text = args.expr if args.expr is not None else _read_text(args.term)
    term = parse_rho(text)
    net = compile_rho(term)
    if not args.run:
        sys.stdout.write(print_binet(net))
        if args.dot:
            _write_text(args.dot, export_dot(net))
        return 0
    ruleset = rho_rules(naive_erasure=args.naive_erasure)
    trace, limited = _run_reduction(args, net, ruleset)
    sys.stdout.write(print_binet(trace.normal_form))
    sys.stdout.write(_stats_lines(trace))
    args.net = args.term if args.expr is None else "term"
    _report_trace(trace, args)
    return 2 if limited else 0


def cmd_bench(args: argparse.Namespace) -> int:
    net = _load_net(args.net)
    ruleset = _load_rules(args.rules)
    rows: list[dict] = []
    for kind in args.strategies.split(","):
        kind = kind.strip()
        if kind not in (DETERMINISTIC, WEIGHTED, STOCHASTIC):
            raise CliError(f"unknown strategy {kind!r}")
        seeds: Sequence[Optional[int]]
        seeds = range(args.seeds) if kind == STOCHASTIC else (None,)
        for seed in seeds:
            strategy = Strategy(kind, seed, not args.single_redex)
            try:
                trace = reduce(
                    net, ruleset, strategy=strategy, max_passes=args.max_passes
                )
            except StepLimitExceeded as exc:
                trace = exc.trace
            rows.append(
                {
                    "strategy": kind,
                    "seed": "-" if seed is None else seed,
                    "passes": len(trace.passes),
                    "interactions": trace.interactions,
                    "termination": trace.termination,
                }
            )
    print("strategy\tseed\tpasses\tinteractions\ttermination")
    for row in rows:
        print(
            f'{row["strategy"]}\t{row["seed"]}\t{row["passes"]}'
            f'\t{row["interactions"]}\t{row["termination"]}'
        )
    if args.plot:
        _plot_bench(rows, args.plot, title=f"strategies on {args.net}")
    return 0


def cmd_corpus(args: argparse.Namespace) -> int:
    root = resources.files("binets.corpus")
    names = sorted(
        entry.name
        for entry in root.iterdir()
        if entry.is_file() and not entry.name.startswith("__")
    )
    if not args.name:
        for name in names:
            print(name)
        return 0
    if args.name not in names:
        raise CliError(f"no corpus file {args.name!r}; try: " + ", ".join(names))
    sys.stdout.write(root.joinpath(args.name).read_text("utf-8"))
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def _add_strategy_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--strategy",
        choices=(DETERMINISTIC, WEIGHTED, STOCHASTIC),
        default=DETERMINISTIC,
        help="candidate ordering (default: deterministic)",
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="seed for --strategy stochastic"
    )
    parser.add_argument(
        "--single-redex",
        action="store_true",
        help="fire one rewrite per pass instead of a maximal safe set",
    )
    parser.add_argument(
        "--max-passes", type=int, default=None, help="stop after this many passes"
    )
    parser.add_argument(
        "--max-steps", type=int, default=None, help="stop after this many interactions"
    )


def _add_report_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--snapshots", metavar="DIR", help="write every pass snapshot to DIR"
    )
    parser.add_argument(
        "--dot", metavar="PATH", help="write a Graphviz view of the final net"
    )
    parser.add_argument(
        "--plot", metavar="PATH", help="render a per-pass activity figure (png/svg/pdf)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binet",
        description="parse, check and reduce hierarchical interaction nets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate net and rule files")
    p.add_argument("nets", nargs="*", metavar="NET", help="net files (- for stdin)")
    p.add_argument("--rules", help="rule file or bundled name to check")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="reduce a net to normal form")
    p.add_argument("net", metavar="NET", help="net file (- for stdin)")
    p.add_argument("--rules", help=f"rule file or bundled name (or ${RULES_ENV})")
    _add_strategy_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("step", help="run a bounded number of passes")
    p.add_argument("net", metavar="NET")
    p.add_argument("--rules", help=f"rule file or bundled name (or ${RULES_ENV})")
    p.add_argument(
        "--passes", type=int, default=1, help="how many passes to run (default 1)"
    )
    _add_strategy_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_step)

    p = sub.add_parser("trace", help="reduce and print the firing log as TSV")
    p.add_argument("net", metavar="NET")
    p.add_argument("--rules", help=f"rule file or bundled name (or ${RULES_ENV})")
    _add_strategy_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("rho", help="compile a term file to a net")
    p.add_argument("term", nargs="?", metavar="FILE", help="term file (- for stdin)")
    p.add_argument("--expr", help="inline term text instead of a file")
    p.add_argument("--run", action="store_true", help="also reduce the net")
    p.add_argument(
        "--naive-erasure",
        action="store_true",
        help="use the rule variant that erases matcher content incrementally",
    )
    _add_strategy_flags(p)
    _add_report_flags(p)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("bench", help="compare strategies on one net")
    p.add_argument("net", metavar="NET")
    p.add_argument("--rules", help=f"rule file or bundled name (or ${RULES_ENV})")
    p.add_argument(
        "--strategies",
        default=",".join((DETERMINISTIC, WEIGHTED, STOCHASTIC)),
        help="comma-separated strategy kinds",
    )
    p.add_argument(
        "--seeds", type=int, default=10, help="stochastic seeds 0..N-1 (default 10)"
    )
    p.add_argument("--single-redex", action="store_true")
    p.add_argument("--max-passes", type=int, default=1000)
    p.add_argument("--plot", metavar="PATH", help="render the comparison as a figure")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("corpus", help="list or print bundled example files")
    p.add_argument("name", nargs="?", help="file to print; omit to list")
    p.set_defaults(func=cmd_corpus)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rho" and args.term is None and args.expr is None:
        parser.error("rho needs a FILE or --expr")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, InvalidBinetError, RhoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
