"""Immutable model of bigraphical nets.

A net is a forest of agents plus a bag of wires.  Every agent carries one
principal port and two ordered lists of auxiliary ports (external and
internal); nesting is part of the structure, not an annotation.  Labels are
plain strings and may occur at most twice in a net; labels occurring exactly
once form the net's interface.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

Label = str
Path = tuple[int, ...]

# Namespace reserved for engine-minted labels; the parser rejects it.
FRESH_PREFIX = "%"


def is_fresh_label(label: Label) -> bool:
    return label.startswith(FRESH_PREFIX)


@dataclass(frozen=True)
class AgentSymbol:
    """A symbol name with fixed internal/external auxiliary arities."""

    name: str
    internal_arity: int = 0
    external_arity: int = 0

    @property
    def arity(self) -> tuple[int, int]:
        return (self.internal_arity, self.external_arity)


class SignatureError(ValueError):
    """Two declarations for one symbol name disagree on arity."""


@dataclass(frozen=True)
class Signature:
    """A set of agent symbols, at most one per name."""

    symbols: tuple[AgentSymbol, ...] = ()

    def __post_init__(self) -> None:
        seen: dict[str, AgentSymbol] = {}
        for sym in self.symbols:
            prev = seen.get(sym.name)
            if prev is not None and prev != sym:
                raise SignatureError(
                    f"symbol {sym.name} declared with arity {prev.arity} and {sym.arity}"
                )
            seen[sym.name] = sym
        object.__setattr__(self, "_by_name", seen)

    def get(self, name: str) -> Optional[AgentSymbol]:
        return self._by_name.get(name)  # type: ignore[attr-defined]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name  # type: ignore[attr-defined]

    def __iter__(self) -> Iterator[AgentSymbol]:
        return iter(self._by_name.values())  # type: ignore[attr-defined]

    def merge(self, other: "Signature") -> "Signature":
        return Signature(tuple(self._by_name.values()) + other.symbols)  # type: ignore[attr-defined]

    def with_symbols(self, *syms: AgentSymbol) -> "Signature":
        return Signature(self.symbols + tuple(syms))


@dataclass(frozen=True)
class Agent:
    """One agent: symbol, principal port, auxiliary ports, nested children.

    Arity consistency is deliberately not enforced here so that invalid
    nets can be built and handed to validate().
    """

    symbol: AgentSymbol
    principal: Label
    external: tuple[Label, ...] = ()
    internal: tuple[Label, ...] = ()
    children: tuple["Agent", ...] = ()

    def ports(self) -> Iterator[Label]:
        yield self.principal
        yield from self.external
        yield from self.internal

    def walk(self) -> Iterator["Agent"]:
        """This agent and all transitive descendants, preorder."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class Wire:
    """A floating link between two port labels; ends are unordered."""

    a: Label
    b: Label

    @property
    def ends(self) -> tuple[Label, Label]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Binet:
    agents: tuple[Agent, ...] = ()
    wires: tuple[Wire, ...] = ()
    signature: Signature = field(default_factory=Signature)

    def walk(self) -> Iterator[Agent]:
        for agent in self.agents:
            yield from agent.walk()


def iter_agents(binet: Binet) -> Iterator[tuple[Path, Agent, Optional[Agent]]]:
    """Yield (path, agent, parent) for every agent, preorder."""

    def rec(agents: tuple[Agent, ...], prefix: Path, parent: Optional[Agent]):
        for i, agent in enumerate(agents):
            path = prefix + (i,)
            yield path, agent, parent
            yield from rec(agent.children, path, agent)

    yield from rec(binet.agents, (), None)


def agent_at(binet: Binet, path: Path) -> Agent:
    agents = binet.agents
    agent: Optional[Agent] = None
    for i in path:
        agent = agents[i]
        agents = agent.children
    if agent is None:
        raise KeyError("empty path does not address an agent")
    return agent


@dataclass(frozen=True)
class PortRef:
    """One occurrence of a label: an agent port or a wire end.

    kind is "principal", "external", "internal" or "wire".  For agent ports
    path addresses the agent and slot indexes into the port list; for wire
    ends path is (wire_index,) and slot is the end (0 or 1).
    """

    kind: str
    path: Path
    slot: int = 0


def occurrences(binet: Binet) -> dict[Label, list[PortRef]]:
    occ: dict[Label, list[PortRef]] = {}

    def add(label: Label, ref: PortRef) -> None:
        occ.setdefault(label, []).append(ref)

    for path, agent, _parent in iter_agents(binet):
        add(agent.principal, PortRef("principal", path))
        for i, lab in enumerate(agent.external):
            add(lab, PortRef("external", path, i))
        for i, lab in enumerate(agent.internal):
            add(lab, PortRef("internal", path, i))
    for w, wire in enumerate(binet.wires):
        add(wire.a, PortRef("wire", (w,), 0))
        add(wire.b, PortRef("wire", (w,), 1))
    return occ


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: str = ""

    def __str__(self) -> str:
        loc = f" at {self.where}" if self.where else ""
        return f"{self.code}{loc}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


class InvalidBinetError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(str(report))


def path_str(path: Path) -> str:
    return "/" + "/".join(str(i) for i in path)


def validate(binet: Binet) -> ValidationReport:
    """Check label usage, arities and symbol declarations."""
    bad: list[Violation] = []
    sig = binet.signature
    for path, agent, _parent in iter_agents(binet):
        declared = sig.get(agent.symbol.name)
        if declared is None:
            bad.append(
                Violation(
                    "undeclared-symbol",
                    f"symbol {agent.symbol.name} not in signature",
                    path_str(path),
                )
            )
        elif declared != agent.symbol:
            bad.append(
                Violation(
                    "symbol-conflict",
                    f"agent uses {agent.symbol.name}{agent.symbol.arity} but "
                    f"signature declares {declared.arity}",
                    path_str(path),
                )
            )
        if (len(agent.internal), len(agent.external)) != agent.symbol.arity:
            bad.append(
                Violation(
                    "arity-mismatch",
                    f"{agent.symbol.name} expects {agent.symbol.arity[1]} external"
                    f" and {agent.symbol.arity[0]} internal ports, has"
                    f" ({len(agent.external)}, {len(agent.internal)})",
                    path_str(path),
                )
            )
    for w, wire in enumerate(binet.wires):
        if wire.a == wire.b:
            bad.append(
                Violation("wire-self-loop", f"wire {wire.a}-{wire.b} links a label to itself", f"wire {w}")
            )
    for label, refs in occurrences(binet).items():
        if len(refs) > 2:
            bad.append(
                Violation("label-overuse", f"label {label} occurs {len(refs)} times", label)
            )
    return ValidationReport(tuple(bad))


def require_valid(binet: Binet) -> None:
    report = validate(binet)
    if not report.ok:
        raise InvalidBinetError(report)


def interface(binet: Binet) -> frozenset[Label]:
    """Labels occurring exactly once: the net's free ports."""
    require_valid(binet)
    return frozenset(lab for lab, refs in occurrences(binet).items() if len(refs) == 1)


def rename_agent(agent: Agent, mapping: dict[Label, Label]) -> Agent:
    return Agent(
        symbol=agent.symbol,
        principal=mapping.get(agent.principal, agent.principal),
        external=tuple(mapping.get(l, l) for l in agent.external),
        internal=tuple(mapping.get(l, l) for l in agent.internal),
        children=tuple(rename_agent(c, mapping) for c in agent.children),
    )


def rename_binet(binet: Binet, mapping: dict[Label, Label]) -> Binet:
    return Binet(
        agents=tuple(rename_agent(a, mapping) for a in binet.agents),
        wires=tuple(
            Wire(mapping.get(w.a, w.a), mapping.get(w.b, w.b)) for w in binet.wires
        ),
        signature=binet.signature,
    )


def labels(binet: Binet) -> frozenset[Label]:
    return frozenset(occurrences(binet).keys())


# ---------------------------------------------------------------------------
# Isomorphism


def _shape(agent: Agent) -> tuple:
    """Label-free structural fingerprint used to prune the iso search."""
    return (
        agent.symbol.name,
        agent.symbol.arity,
        tuple(sorted(_shape(c) for c in agent.children)),
    )


class _Renaming:
    """Incrementally built label bijection with backtracking."""

    def __init__(self) -> None:
        self.fwd: dict[Label, Label] = {}
        self.rev: dict[Label, Label] = {}
        self.trail: list[Label] = []

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            key = self.trail.pop()
            val = self.fwd.pop(key)
            del self.rev[val]

    def bind(self, a: Label, b: Label) -> bool:
        cur = self.fwd.get(a)
        if cur is not None:
            return cur == b
        if b in self.rev:
            return False
        self.fwd[a] = b
        self.rev[b] = a
        self.trail.append(a)
        return True


def _iter_agent(a: Agent, b: Agent, ren: _Renaming):
    """Yield once per way of matching b against a; bindings live across the
    yield and are removed when the generator is resumed or exhausted."""
    if a.symbol != b.symbol:
        return
    if len(a.external) != len(b.external) or len(a.internal) != len(b.internal):
        return
    mark = ren.mark()
    ok = ren.bind(a.principal, b.principal)
    for x, y in zip(a.external, b.external):
        ok = ok and ren.bind(x, y)
    for x, y in zip(a.internal, b.internal):
        ok = ok and ren.bind(x, y)
    if ok:
        yield from _iter_forest(a.children, b.children, ren)
    ren.undo(mark)


def _iter_forest(xs: tuple[Agent, ...], ys: tuple[Agent, ...], ren: _Renaming):
    """Yield once per multiset pairing of the sibling lists that matches.

    The search backtracks through every alternative pairing, so a caller can
    reject a solution (e.g. because the wires do not line up) and resume.
    """
    if len(xs) != len(ys):
        return
    if not xs:
        yield True
        return
    if sorted(_shape(a) for a in xs) != sorted(_shape(b) for b in ys):
        return

    used = [False] * len(ys)

    def rec(i: int):
        if i == len(xs):
            yield True
            return
        a = xs[i]
        sh = _shape(a)
        for j, b in enumerate(ys):
            if used[j] or _shape(b) != sh:
                continue
            for _ in _iter_agent(a, b, ren):
                used[j] = True
                yield from rec(i + 1)
                used[j] = False

    yield from rec(0)


def _iter_wires(xs: tuple[Wire, ...], ys: tuple[Wire, ...], ren: _Renaming):
    if len(xs) != len(ys):
        return
    used = [False] * len(ys)

    def rec(i: int):
        if i == len(xs):
            yield True
            return
        w = xs[i]
        for j, v in enumerate(ys):
            if used[j]:
                continue
            for p, q in ((v.a, v.b), (v.b, v.a)):
                mark = ren.mark()
                if ren.bind(w.a, p) and ren.bind(w.b, q):
                    used[j] = True
                    yield from rec(i + 1)
                    used[j] = False
                ren.undo(mark)

    yield from rec(0)


def find_iso(a: Binet, b: Binet) -> Optional[dict[Label, Label]]:
    """A label renaming witnessing a ≅ b, or None.

    Isomorphism respects symbols, port order, principal-port assignment and
    nesting; sibling order and label spelling do not matter.  Agent pairing
    and wire pairing backtrack into each other: an agent pairing that leaves
    the wires unmatchable is revisited rather than rejected.
    """
    ren = _Renaming()
    for _ in _iter_forest(a.agents, b.agents, ren):
        if next(_iter_wires(a.wires, b.wires, ren), None) is not None:
            return dict(ren.fwd)
    return None


def iso(a: Binet, b: Binet) -> bool:
    return find_iso(a, b) is not None


# ---------------------------------------------------------------------------
# Place and link views


@dataclass(frozen=True)
class PlaceNode:
    """Pure nesting structure: symbol name plus child subtrees."""

    symbol: str
    path: Path
    children: tuple["PlaceNode", ...] = ()


def place_view(binet: Binet) -> tuple[PlaceNode, ...]:
    def rec(agents: tuple[Agent, ...], prefix: Path) -> tuple[PlaceNode, ...]:
        return tuple(
            PlaceNode(a.symbol.name, prefix + (i,), rec(a.children, prefix + (i,)))
            for i, a in enumerate(agents)
        )

    return rec(binet.agents, ())


def link_view(binet: Binet) -> dict[Label, tuple[PortRef, ...]]:
    """Connectivity only: every label with all its port occurrences."""
    return {lab: tuple(refs) for lab, refs in occurrences(binet).items()}


def from_views(
    place: tuple[PlaceNode, ...],
    link: dict[Label, tuple[PortRef, ...]],
    signature: Signature,
) -> Binet:
    """Rebuild a binet from its place and link views."""
    principal: dict[Path, Label] = {}
    external: dict[Path, dict[int, Label]] = {}
    internal: dict[Path, dict[int, Label]] = {}
    wire_ends: dict[int, dict[int, Label]] = {}
    for label, refs in link.items():
        for ref in refs:
            if ref.kind == "principal":
                principal[ref.path] = label
            elif ref.kind == "external":
                external.setdefault(ref.path, {})[ref.slot] = label
            elif ref.kind == "internal":
                internal.setdefault(ref.path, {})[ref.slot] = label
            elif ref.kind == "wire":
                wire_ends.setdefault(ref.path[0], {})[ref.slot] = label
            else:
                raise ValueError(f"unknown port kind {ref.kind!r}")

    def ports(table: dict[Path, dict[int, Label]], path: Path) -> tuple[Label, ...]:
        slots = table.get(path, {})
        return tuple(slots[i] for i in sorted(slots))

    def build(node: PlaceNode) -> Agent:
        sym = signature.get(node.symbol)
        if sym is None:
            raise SignatureError(f"symbol {node.symbol} not in signature")
        if node.path not in principal:
            raise ValueError(f"no principal port recorded for agent at {path_str(node.path)}")
        return Agent(
            symbol=sym,
            principal=principal[node.path],
            external=ports(external, node.path),
            internal=ports(internal, node.path),
            children=tuple(build(c) for c in node.children),
        )

    wires = tuple(
        Wire(wire_ends[i][0], wire_ends[i][1]) for i in sorted(wire_ends)
    )
    return Binet(tuple(build(n) for n in place), wires, signature)


# ---------------------------------------------------------------------------
# Canonical ordering helper shared by the printer and exporters


def structure_key(agent: Agent) -> tuple:
    """Deterministic sort key: structural first, labels as tiebreak."""
    return (
        agent.symbol.name,
        agent.symbol.arity,
        len(agent.children),
        tuple(sorted(structure_key(c) for c in agent.children)),
        agent.principal,
        agent.external,
        agent.internal,
    )


def sorted_binet(binet: Binet) -> Binet:
    """The same net with sibling lists canonically ordered."""

    def sort_agent(agent: Agent) -> Agent:
        kids = tuple(sorted((sort_agent(c) for c in agent.children), key=structure_key))
        return Agent(agent.symbol, agent.principal, agent.external, agent.internal, kids)

    agents = tuple(sorted((sort_agent(a) for a in binet.agents), key=structure_key))
    wires = tuple(
        sorted((Wire(*sorted(w.ends)) for w in binet.wires), key=lambda w: w.ends)
    )
    return Binet(agents, wires, binet.signature)
