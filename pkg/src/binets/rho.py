"""A small pattern-matching calculus compiled to binets.

Terms: variables (lowercase names), constructors (uppercase names),
application (juxtaposition, left-associative) and abstraction
`pattern -> body` (right-associative, binds loosest).  Patterns must be
atomic (a single variable or a bare constructor) and linear.

Compilation: an application becomes an App agent whose principal port faces
the function; an abstraction becomes an Abs box whose external port leads to
the body (compiled alongside the box, not inside it) and whose internal port
leads to the pattern; constructor patterns live nested inside the box, and a
pattern variable's port is shared directly with the variable's use in the
body.  An unused pattern variable is capped with an eps agent.

The bundled rule library drives reduction: App meets Abs to build a matcher
M carrying the pattern content; equal constructors consume each other inside
the matcher; different ones clash into bot; an emptied matcher collapses to
a wire; eps erases anything.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Union

from .core import Agent, AgentSymbol, Binet, Signature, require_valid
from .rules import RuleSet
from .syntax import ParseError, parse_rules


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Constructor:
    name: str


@dataclass(frozen=True)
class Application:
    function: "RhoTerm"
    argument: "RhoTerm"


@dataclass(frozen=True)
class Abstraction:
    pattern: "RhoTerm"
    body: "RhoTerm"


RhoTerm = Union[Variable, Constructor, Application, Abstraction]


class RhoError(ValueError):
    pass


_RHO_TOKEN = re.compile(
    r"(?P<comment>\#[^\n]*)|(?P<ws>\s+)|(?P<arrow>->)|(?P<lp>\()|(?P<rp>\))"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
)


def _rho_tokens(text: str) -> list[tuple[str, str, int, int]]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _RHO_TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup or ""
        value = m.group()
        if kind not in ("comment", "ws"):
            tokens.append((kind, value, line, col))
        line += value.count("\n")
        if "\n" in value:
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


def parse_rho(text: str) -> RhoTerm:
    """Parse one term.  Uppercase initial = constructor, else variable."""
    tokens = _rho_tokens(text)
    i = 0

    def peek():
        return tokens[i]

    def take():
        nonlocal i
        tok = tokens[i]
        if tok[0] != "eof":
            i += 1
        return tok

    def parse_term() -> RhoTerm:
        left = parse_app()
        if peek()[0] == "arrow":
            take()
            return Abstraction(left, parse_term())
        return left

    def parse_app() -> RhoTerm:
        term = parse_atom()
        while peek()[0] in ("name", "lp"):
            term = Application(term, parse_atom())
        return term

    def parse_atom() -> RhoTerm:
        kind, value, line, col = take()
        if kind == "name":
            return Constructor(value) if value[:1].isupper() else Variable(value)
        if kind == "lp":
            term = parse_term()
            k, v, l, c = take()
            if k != "rp":
                raise ParseError(f"found {v!r}" if v else "unexpected end of input", l, c, ("')'",))
            return term
        raise ParseError(
            f"found {value!r}" if value else "unexpected end of input",
            line,
            col,
            ("a name", "'('"),
        )

    term = parse_term()
    kind, value, line, col = peek()
    if kind != "eof":
        raise ParseError(f"found {value!r} after the term", line, col)
    return term


APP = AgentSymbol("App", 0, 2)
ABS = AgentSymbol("Abs", 1, 1)
EPS = AgentSymbol("eps", 0, 0)


def term_constructors(term: RhoTerm) -> frozenset[str]:
    if isinstance(term, Constructor):
        return frozenset((term.name,))
    if isinstance(term, Application):
        return term_constructors(term.function) | term_constructors(term.argument)
    if isinstance(term, Abstraction):
        return term_constructors(term.pattern) | term_constructors(term.body)
    return frozenset()


def compile_rho(term: RhoTerm) -> Binet:
    """Compile a closed term to a binet with a single free result port."""
    counter = 0
    order: dict[str, int] = {}

    def mint() -> str:
        nonlocal counter
        label = f"p{counter}"
        order[label] = counter
        counter += 1
        return label

    # Union-find over port labels: a variable's use unifies its wire with the
    # pattern port opened by its binder.
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(x: str, y: str) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    symbols: dict[str, AgentSymbol] = {s.name: s for s in (APP, ABS, EPS)}

    def constructor_symbol(name: str) -> AgentSymbol:
        sym = AgentSymbol(name, 0, 0)
        symbols.setdefault(name, sym)
        return sym

    def compile_into(node: RhoTerm, root: str, place: list[Agent], env: dict) -> None:
        if isinstance(node, Variable):
            entry = env.get(node.name)
            if entry is None:
                raise RhoError(f"unbound variable {node.name}: terms must be closed")
            if entry["used"]:
                raise RhoError(
                    f"variable {node.name} used more than once; patterns are linear"
                )
            entry["used"] = True
            union(root, entry["port"])
        elif isinstance(node, Constructor):
            place.append(Agent(constructor_symbol(node.name), root))
        elif isinstance(node, Application):
            fn_port = mint()
            arg_port = mint()
            place.append(Agent(APP, fn_port, (root, arg_port)))
            compile_into(node.function, fn_port, place, env)
            compile_into(node.argument, arg_port, place, env)
        elif isinstance(node, Abstraction):
            body_port = mint()
            pattern_port = mint()
            box_children: list[Agent] = []
            inner = dict(env)
            pattern = node.pattern
            if isinstance(pattern, Variable):
                inner[pattern.name] = {"port": pattern_port, "used": False}
            elif isinstance(pattern, Constructor):
                box_children.append(Agent(constructor_symbol(pattern.name), pattern_port))
            else:
                raise RhoError(
                    "only atomic patterns (a variable or a bare constructor) "
                    "are supported"
                )
            place.append(
                Agent(ABS, root, (body_port,), (pattern_port,), tuple(box_children))
            )
            compile_into(node.body, body_port, place, env=inner)
            if isinstance(pattern, Variable) and not inner[pattern.name]["used"]:
                place.append(Agent(EPS, pattern_port))
        else:
            raise RhoError(f"not a rho term: {node!r}")

    top: list[Agent] = []
    root = mint()
    compile_into(term, root, top, {})

    # Resolve unified labels to the earliest-minted representative.
    resolved: dict[str, str] = {}
    for label in order:
        cls = find(label)
        best = resolved.get(cls)
        if best is None or order[label] < order[best]:
            resolved[cls] = label
    mapping = {label: resolved[find(label)] for label in order}

    def rename(agent: Agent) -> Agent:
        return Agent(
            agent.symbol,
            mapping[agent.principal],
            tuple(mapping[l] for l in agent.external),
            tuple(mapping[l] for l in agent.internal),
            tuple(rename(c) for c in agent.children),
        )

    binet = Binet(
        tuple(rename(a) for a in top),
        (),
        Signature(tuple(symbols.values())),
    )
    require_valid(binet)
    return binet


@lru_cache(maxsize=None)
def _load_ruleset(filename: str) -> RuleSet:
    text = resources.files("binets.corpus").joinpath(filename).read_text("utf-8")
    return parse_rules(text)


def rho_rules(naive_erasure: bool = False) -> RuleSet:
    """The bundled matching-calculus library.

    The rules are constructor-generic: one diagonal rule consumes equal
    constructors, one off-diagonal rule clashes different ones, so no
    per-constructor rules are needed.  naive_erasure swaps the eps/M rule
    for the variant that keeps the matcher's content and caps each loose
    end with an eps pair.
    """
    return _load_ruleset("rho_naive.rules" if naive_erasure else "rho.rules")
