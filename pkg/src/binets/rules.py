"""Rewrite rules over binets: patterns, templates, matching, instantiation.

A rule's left side is a small pattern forest; its right side is a template.
Metavariable kinds: lowercase names bind single port labels, uppercase names
bind whole port vectors (in a port slot) or whole subnets (in a child slot),
and ?name binds an agent symbol.  Distinct symbol metavariables in one rule
bind distinct symbols; that convention lets one diagonal rule (?c ⋈ ?c) and
one off-diagonal rule (?c ⋈ ?d) partition the constructor pairs.

Active rules are indexed by the symbols of the two agents whose principal
ports share the anchor label variable.  Rule selection per symbol pair is by
specificity: exact symbols beat one-wildcard rules beat two-wildcard rules;
ties are ruleset violations reported by check_ruleset.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Union

from .core import (
    Agent,
    AgentSymbol,
    Binet,
    Label,
    Path,
    Signature,
    ValidationReport,
    Violation,
    Wire,
    iter_agents,
    path_str,
    rename_agent,
)

ACTIVE = "active"
INACTIVE = "inactive"


# ---------------------------------------------------------------------------
# Pattern and template syntax trees


@dataclass(frozen=True)
class VectorVar:
    """Binds a whole external or internal port vector."""

    name: str


@dataclass(frozen=True)
class SubnetVar:
    """Binds a whole child list (a subnet)."""

    name: str


@dataclass(frozen=True)
class SymbolVar:
    """Binds an agent symbol."""

    name: str


@dataclass(frozen=True)
class DerivedSymbol:
    """A symbol minted at instantiation time: bound base name + suffix."""

    base: str
    suffix: str


Slot = Union[tuple[str, ...], VectorVar]


@dataclass(frozen=True)
class PatternAgent:
    symbol: Union[str, SymbolVar]
    principal: str
    external: Slot = ()
    internal: Slot = ()
    children: Union[tuple["PatternAgent", ...], SubnetVar] = ()


@dataclass(frozen=True)
class TemplateAgent:
    symbol: Union[str, SymbolVar, DerivedSymbol]
    principal: str
    external: Slot = ()
    internal: Slot = ()
    children: Union[tuple["TemplateAgent", ...], SubnetVar] = ()


@dataclass(frozen=True)
class TemplateWire:
    a: str
    b: str


@dataclass(frozen=True)
class Splice:
    """A bound subnet inserted at the host of the rule's first pattern agent."""

    name: str


@dataclass(frozen=True)
class Generator:
    """foreach var over a bound domain, emitting the body once per element.

    kind "interface": var ranges over the once-occurring labels of a bound
    subnet; the partner form ~var names a fresh label that also renames the
    spliced copy of the subnet (a cut: the copy is capped on its side, the
    original port keeps its name outside).  kind "unique" is the same domain
    without the cut.  kind "vector" ranges over a bound port vector.
    """

    var: str
    kind: str  # "interface" | "unique" | "vector"
    source: str
    body: tuple[Union[TemplateAgent, TemplateWire], ...] = ()


TemplateItem = Union[TemplateAgent, TemplateWire, Splice, Generator]


@dataclass(frozen=True)
class Rule:
    name: str
    kind: str  # ACTIVE | INACTIVE
    lhs: tuple[PatternAgent, ...]
    rhs: tuple[TemplateItem, ...]
    priority: int = 0
    index: int = 0  # position in the ruleset, the deterministic tiebreak


PatPath = tuple[int, ...]


def pattern_nodes(rule: Rule) -> list[tuple[PatPath, PatternAgent]]:
    out: list[tuple[PatPath, PatternAgent]] = []

    def rec(agents: tuple[PatternAgent, ...], prefix: PatPath) -> None:
        for i, pat in enumerate(agents):
            out.append((prefix + (i,), pat))
            if isinstance(pat.children, tuple):
                rec(pat.children, prefix + (i,))

    rec(rule.lhs, ())
    return out


def _slot_vars(slot: Slot) -> tuple[str, ...]:
    return slot if isinstance(slot, tuple) else ()


def lhs_label_counts(rule: Rule) -> dict[str, int]:
    counts: dict[str, int] = {}
    for _path, pat in pattern_nodes(rule):
        for var in (pat.principal, *_slot_vars(pat.external), *_slot_vars(pat.internal)):
            counts[var] = counts.get(var, 0) + 1
    return counts


@dataclass(frozen=True)
class AnchorInfo:
    var: str
    carriers: tuple[PatPath, PatPath]
    # Each side is a concrete symbol name or None for a symbol metavariable.
    pair: tuple[Optional[str], Optional[str]]
    diagonal: bool  # both carriers share one symbol metavariable


def anchor_info(rule: Rule) -> Optional[AnchorInfo]:
    """The label variable occurring exactly twice as a principal port."""
    nodes = pattern_nodes(rule)
    principal_at: dict[str, list[PatPath]] = {}
    for path, pat in nodes:
        principal_at.setdefault(pat.principal, []).append(path)
    anchors = [(var, paths) for var, paths in principal_at.items() if len(paths) == 2]
    if len(anchors) != 1:
        return None
    var, paths = anchors[0]
    by_path = dict(nodes)
    refs = []
    for p in paths:
        sym = by_path[p].symbol
        refs.append(sym if isinstance(sym, str) else None)
    syms = [by_path[p].symbol for p in paths]
    diagonal = (
        isinstance(syms[0], SymbolVar)
        and isinstance(syms[1], SymbolVar)
        and syms[0].name == syms[1].name
    )
    return AnchorInfo(var, (paths[0], paths[1]), (refs[0], refs[1]), diagonal)


def bound_metavars(rule: Rule) -> tuple[set[str], set[str], set[str]]:
    """(vector vars, subnet vars, symbol vars) bound on the LHS."""
    vectors: set[str] = set()
    subnets: set[str] = set()
    symbols: set[str] = set()
    for _path, pat in pattern_nodes(rule):
        if isinstance(pat.symbol, SymbolVar):
            symbols.add(pat.symbol.name)
        for slot in (pat.external, pat.internal):
            if isinstance(slot, VectorVar):
                vectors.add(slot.name)
        if isinstance(pat.children, SubnetVar):
            subnets.add(pat.children.name)
    return vectors, subnets, symbols


def _template_agents(items: tuple[TemplateItem, ...]) -> Iterator[TemplateAgent]:
    for item in items:
        if isinstance(item, TemplateAgent):
            yield item
            if isinstance(item.children, tuple):
                yield from _template_agents(item.children)
        elif isinstance(item, Generator):
            yield from _template_agents(item.body)


def subnet_splice_count(rule: Rule, name: str) -> int:
    n = 0
    for item in rule.rhs:
        if isinstance(item, Splice) and item.name == name:
            n += 1
    for agent in _template_agents(rule.rhs):
        if isinstance(agent.children, SubnetVar) and agent.children.name == name:
            n += 1
    return n


def cut_sources(rule: Rule) -> set[str]:
    """Subnet vars whose spliced copy gets renamed by an interface generator."""
    out: set[str] = set()
    for item in rule.rhs:
        if isinstance(item, Generator) and item.kind == "interface":
            if _body_uses_partner(item):
                out.add(item.source)
    return out


def _body_uses_partner(gen: Generator) -> bool:
    partner = "~" + gen.var
    for agent in _template_agents(gen.body):
        for var in (agent.principal, *_slot_vars(agent.external), *_slot_vars(agent.internal)):
            if var == partner:
                return True
    for item in gen.body:
        if isinstance(item, TemplateWire) and partner in (item.a, item.b):
            return True
    return False


def moves_subnet(rule: Rule) -> bool:
    """Whether a bound subnet ends up under a different host (or is dropped).

    A subnet counts as kept in place only when the RHS re-emits it under an
    agent template identical to its LHS host pattern.
    """
    _vectors, subnets, _symbols = bound_metavars(rule)
    if not subnets:
        return False
    hosts: dict[str, PatternAgent] = {}
    for _path, pat in pattern_nodes(rule):
        if isinstance(pat.children, SubnetVar):
            hosts[pat.children.name] = pat
    for name in subnets:
        kept = False
        if name not in cut_sources(rule):
            host = hosts[name]
            for agent in _template_agents(rule.rhs):
                if (
                    isinstance(agent.children, SubnetVar)
                    and agent.children.name == name
                    and agent.symbol == host.symbol
                    and agent.principal == host.principal
                    and agent.external == host.external
                    and agent.internal == host.internal
                ):
                    kept = True
        if not kept:
            return True
    return False


# ---------------------------------------------------------------------------
# Rule sets


class RulesetError(ValueError):
    pass


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    signature: Signature = field(default_factory=Signature)

    def __post_init__(self) -> None:
        exact: dict[frozenset[str], list[Rule]] = {}
        semi: list[tuple[str, Rule]] = []
        diag: list[Rule] = []
        offdiag: list[Rule] = []
        inactive: list[Rule] = []
        for rule in self.rules:
            if rule.kind == INACTIVE:
                inactive.append(rule)
                continue
            info = anchor_info(rule)
            if info is None:
                continue  # reported by check_ruleset; cannot be indexed
            a, b = info.pair
            if a is not None and b is not None:
                exact.setdefault(frozenset((a, b)), []).append(rule)
            elif a is not None or b is not None:
                semi.append((a if a is not None else b, rule))  # type: ignore[arg-type]
            elif info.diagonal:
                diag.append(rule)
            else:
                offdiag.append(rule)
        object.__setattr__(self, "_exact", exact)
        object.__setattr__(self, "_semi", semi)
        object.__setattr__(self, "_diag", diag)
        object.__setattr__(self, "_offdiag", offdiag)
        object.__setattr__(self, "_inactive", tuple(inactive))

    @property
    def inactive_rules(self) -> tuple[Rule, ...]:
        return self._inactive  # type: ignore[attr-defined]

    @property
    def active_rules(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.kind == ACTIVE)

    def active_rule_for(self, a: str, b: str) -> Optional[Rule]:
        """The most specific active rule for an unordered symbol-name pair."""
        hit = self._exact.get(frozenset((a, b)))  # type: ignore[attr-defined]
        if hit:
            return hit[0]
        semi = [r for c, r in self._semi if c in (a, b)]  # type: ignore[attr-defined]
        if semi:
            return min(semi, key=lambda r: r.index)
        if a == b:
            return self._diag[0] if self._diag else None  # type: ignore[attr-defined]
        return self._offdiag[0] if self._offdiag else None  # type: ignore[attr-defined]


# ---------------------------------------------------------------------------
# Matching


@dataclass(frozen=True)
class Match:
    rule: Rule
    agents: tuple[tuple[PatPath, Path, Agent], ...]  # pattern node -> net agent
    labels: dict[str, Label]
    vectors: dict[str, tuple[Label, ...]]
    subnets: dict[str, tuple[Agent, ...]]
    symbols: dict[str, AgentSymbol]
    anchor_label: Optional[Label]
    region: frozenset[Path]

    @property
    def location(self) -> Path:
        return min(path for _pp, path, _a in self.agents)

    @property
    def first_agent(self) -> Agent:
        for pp, _path, agent in self.agents:
            if pp == (0,):
                return agent
        raise RuntimeError("match lacks the first top-level pattern agent")

    def sort_key(self) -> tuple:
        return (
            self.location,
            tuple(sorted(p for _pp, p, _a in self.agents)),
            tuple(sorted(self.labels.items())),
            tuple(sorted((k, v.name) for k, v in self.symbols.items())),
        )


class _Env:
    """Backtrackable binding store for one matching attempt."""

    def __init__(self) -> None:
        self.labels: dict[str, Label] = {}
        self.vectors: dict[str, tuple[Label, ...]] = {}
        self.subnets: dict[str, tuple[Agent, ...]] = {}
        self.subnet_paths: dict[str, tuple[Path, ...]] = {}
        self.symbols: dict[str, AgentSymbol] = {}
        self.trail: list[tuple[dict, str]] = []

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            store, key = self.trail.pop()
            del store[key]

    def _bind(self, store: dict, key: str, value) -> bool:
        if key in store:
            return store[key] == value
        store[key] = value
        self.trail.append((store, key))
        return True

    def bind_label(self, var: str, label: Label) -> bool:
        return self._bind(self.labels, var, label)

    def bind_vector(self, var: str, labels: tuple[Label, ...]) -> bool:
        return self._bind(self.vectors, var, labels)

    def bind_subnet(self, var: str, agents: tuple[Agent, ...], paths: tuple[Path, ...]) -> bool:
        return self._bind(self.subnets, var, agents) and self._bind(
            self.subnet_paths, var + "\x00paths", paths
        )

    def bind_symbol(self, var: str, sym: AgentSymbol) -> bool:
        if var not in self.symbols:
            # distinct symbol metavariables bind distinct symbols
            if any(other == sym for other in self.symbols.values()):
                return False
        return self._bind(self.symbols, var, sym)


def _subtree_paths(agent: Agent, path: Path) -> Iterator[Path]:
    yield path
    for i, child in enumerate(agent.children):
        yield from _subtree_paths(child, path + (i,))


def match_pattern(
    rule: Rule, binet: Binet, ruleset: Optional[RuleSet] = None
) -> tuple[Match, ...]:
    """All embeddings of the rule's pattern into the net.

    Agent assignment is injective; label variables may share a target.  When
    a ruleset is given, matches whose anchor symbol pair selects a more
    specific rule are dropped.
    """
    entries = list(iter_agents(binet))
    env = _Env()
    used: set[int] = set()
    assignment: dict[PatPath, tuple[Path, Agent]] = {}
    results: list[Match] = []
    seen: set = set()
    info = anchor_info(rule)

    def match_slot(slot: Slot, labels: tuple[Label, ...], bind_vec) -> bool:
        if isinstance(slot, VectorVar):
            return bind_vec(slot.name, labels)
        if len(slot) != len(labels):
            return False
        return all(env.bind_label(v, l) for v, l in zip(slot, labels))

    def match_children(
        pats: tuple[PatternAgent, ...], agent: Agent, path: Path, patpath: PatPath, k: int
    ) -> bool:
        if k == len(pats):
            return True
        pat = pats[k]
        for i, child in enumerate(agent.children):
            if id(child) in used:
                continue
            mark = env.mark()
            if match_agent(pat, child, path + (i,), patpath + (k,)):
                if match_children(pats, agent, path, patpath, k + 1):
                    return True
                unmatch(patpath + (k,))
            env.undo(mark)
        return False

    def unmatch(patpath: PatPath) -> None:
        # remove this pattern node and its descendants from the assignment
        for pp in [p for p in assignment if p[: len(patpath)] == patpath]:
            _path, agent = assignment.pop(pp)
            used.discard(id(agent))

    def match_agent(pat: PatternAgent, agent: Agent, path: Path, patpath: PatPath) -> bool:
        if isinstance(pat.symbol, str):
            if agent.symbol.name != pat.symbol:
                return False
        else:
            if not env.bind_symbol(pat.symbol.name, agent.symbol):
                return False
        if not env.bind_label(pat.principal, agent.principal):
            return False
        if not match_slot(pat.external, agent.external, env.bind_vector):
            return False
        if not match_slot(pat.internal, agent.internal, env.bind_vector):
            return False
        assignment[patpath] = (path, agent)
        used.add(id(agent))
        if isinstance(pat.children, SubnetVar):
            paths = tuple(path + (i,) for i in range(len(agent.children)))
            if not env.bind_subnet(pat.children.name, agent.children, paths):
                assignment.pop(patpath)
                used.discard(id(agent))
                return False
            return True
        if len(pat.children) != len(agent.children):
            assignment.pop(patpath)
            used.discard(id(agent))
            return False
        if not match_children(pat.children, agent, path, patpath, 0):
            assignment.pop(patpath)
            used.discard(id(agent))
            return False
        return True

    def emit() -> None:
        if info is not None and ruleset is not None:
            a = assignment[info.carriers[0]][1].symbol.name
            b = assignment[info.carriers[1]][1].symbol.name
            if ruleset.active_rule_for(a, b) is not rule:
                return
        region: set[Path] = set()
        for path, agent in assignment.values():
            region.add(path)
        subnet_roots: list[Path] = []
        for key, paths in env.subnet_paths.items():
            name = key.split("\x00")[0]
            subnet_roots.extend(paths)
            for agent, path in zip(env.subnets[name], paths):
                region.update(_subtree_paths(agent, path))
        # A pattern node lying inside a forest bound to a subnet variable
        # would make the match overlap itself (the agent both removed as a
        # match and carried along in the binding); reject such embeddings.
        for path, _agent in assignment.values():
            for root in subnet_roots:
                if path[: len(root)] == root:
                    return
        key = (
            frozenset(id(a) for _p, a in assignment.values()),
            tuple(sorted(env.labels.items())),
            tuple(sorted((k, v.name) for k, v in env.symbols.items())),
            tuple(sorted(env.vectors.items())),
            tuple(sorted((k, tuple(id(a) for a in v)) for k, v in env.subnets.items())),
        )
        if key in seen:
            return
        seen.add(key)
        anchor = env.labels.get(info.var) if info is not None else None
        results.append(
            Match(
                rule=rule,
                agents=tuple((pp, p, a) for pp, (p, a) in sorted(assignment.items())),
                labels=dict(env.labels),
                vectors=dict(env.vectors),
                subnets=dict(env.subnets),
                symbols=dict(env.symbols),
                anchor_label=anchor,
                region=frozenset(region),
            )
        )

    def place_top(k: int) -> None:
        if k == len(rule.lhs):
            emit()
            return
        pat = rule.lhs[k]
        for path, agent, _parent in entries:
            if id(agent) in used:
                continue
            mark = env.mark()
            if match_agent(pat, agent, path, (k,)):
                place_top(k + 1)
                unmatch((k,))
            env.undo(mark)

    place_top(0)
    results.sort(key=lambda m: m.sort_key())
    return tuple(results)


# ---------------------------------------------------------------------------
# Instantiation


class FreshLabels:
    """Thread-safe allocator for engine-minted labels (%0, %1, ...)."""

    def __init__(self, start: int = 0) -> None:
        self._next = start
        self._lock = threading.Lock()

    def __call__(self) -> Label:
        with self._lock:
            n = self._next
            self._next += 1
        return f"%{n}"


@dataclass(frozen=True)
class Delta:
    """One rewrite, addressed by agent identity so deltas commute.

    remove lists matched agent objects (their subtrees go with them); added
    agents are appended at the host of `anchor`, the matched object of the
    rule's first pattern agent.
    """

    remove: tuple[Agent, ...]
    anchor: Agent
    add_agents: tuple[Agent, ...] = ()
    add_wires: tuple[Wire, ...] = ()
    new_symbols: tuple[AgentSymbol, ...] = ()
    rule_name: str = ""
    location: str = ""


class InstantiationError(ValueError):
    pass


def subnet_interface(agents: tuple[Agent, ...]) -> frozenset[Label]:
    """Labels occurring exactly once within a subnet forest."""
    counts: dict[Label, int] = {}
    for root in agents:
        for agent in root.walk():
            for lab in agent.ports():
                counts[lab] = counts.get(lab, 0) + 1
    return frozenset(lab for lab, n in counts.items() if n == 1)


def instantiate(rule: Rule, match: Match, fresh: Callable[[], Label]) -> Delta:
    memo: dict[str, Label] = {}
    new_symbols: dict[str, AgentSymbol] = {}

    cuts: dict[str, dict[Label, Label]] = {}
    for name in cut_sources(rule):
        bound = match.subnets.get(name)
        if bound is not None:
            cuts[name] = {lab: fresh() for lab in sorted(subnet_interface(bound))}

    def resolve_label(var: str, local: dict[str, Label]) -> Label:
        """local doubles as the sink for fresh names minted in its scope."""
        if var in local:
            return local[var]
        if var in match.labels:
            return match.labels[var]
        if local is not memo and not var.startswith("~"):
            # inside a generator body, unknown names are fresh per iteration
            local[var] = fresh()
            return local[var]
        if var not in memo:
            memo[var] = fresh()
        return memo[var]

    def resolve_slot(slot: Slot, local: dict[str, Label]) -> tuple[Label, ...]:
        if isinstance(slot, VectorVar):
            if slot.name not in match.vectors:
                raise InstantiationError(f"unbound vector metavariable {slot.name}")
            return match.vectors[slot.name]
        return tuple(resolve_label(v, local) for v in slot)

    def spliced_subnet(name: str) -> tuple[Agent, ...]:
        if name not in match.subnets:
            raise InstantiationError(f"unbound subnet metavariable {name}")
        agents = match.subnets[name]
        mapping = cuts.get(name)
        if mapping:
            agents = tuple(rename_agent(a, mapping) for a in agents)
        return agents

    def build_agent(tpl: TemplateAgent, local: dict[str, Label]) -> Agent:
        external = resolve_slot(tpl.external, local)
        internal = resolve_slot(tpl.internal, local)
        if isinstance(tpl.symbol, str):
            sym = AgentSymbol(tpl.symbol, len(internal), len(external))
        elif isinstance(tpl.symbol, SymbolVar):
            if tpl.symbol.name not in match.symbols:
                raise InstantiationError(f"unbound symbol metavariable ?{tpl.symbol.name}")
            sym = match.symbols[tpl.symbol.name]
        else:
            base = match.symbols.get(tpl.symbol.base)
            if base is None:
                raise InstantiationError(f"unbound symbol metavariable ?{tpl.symbol.base}")
            sym = AgentSymbol(base.name + tpl.symbol.suffix, len(internal), len(external))
        new_symbols.setdefault(sym.name, sym)
        if isinstance(tpl.children, SubnetVar):
            children = spliced_subnet(tpl.children.name)
        else:
            children = tuple(build_agent(c, local) for c in tpl.children)
        return Agent(sym, resolve_label(tpl.principal, local), external, internal, children)

    add_agents: list[Agent] = []
    add_wires: list[Wire] = []

    def add_wire(a: Label, b: Label) -> None:
        # both ends resolving to one label means a closed loop: the label is
        # already at its two occurrences, so nothing else can reach it; drop
        if a != b:
            add_wires.append(Wire(a, b))

    def run_body(
        body: tuple[Union[TemplateAgent, TemplateWire], ...], scope: dict[str, Label]
    ) -> None:
        for item in body:
            if isinstance(item, TemplateAgent):
                add_agents.append(build_agent(item, scope))
            else:
                add_wire(resolve_label(item.a, scope), resolve_label(item.b, scope))

    for item in rule.rhs:
        if isinstance(item, TemplateAgent):
            add_agents.append(build_agent(item, memo))
        elif isinstance(item, TemplateWire):
            add_wire(resolve_label(item.a, memo), resolve_label(item.b, memo))
        elif isinstance(item, Splice):
            add_agents.extend(spliced_subnet(item.name))
        elif isinstance(item, Generator):
            if item.kind == "vector":
                if item.source not in match.vectors:
                    raise InstantiationError(f"unbound vector metavariable {item.source}")
                domain = list(match.vectors[item.source])
            else:
                if item.source not in match.subnets:
                    raise InstantiationError(f"unbound subnet metavariable {item.source}")
                domain = sorted(subnet_interface(match.subnets[item.source]))
            partners = cuts.get(item.source, {})
            for value in domain:
                scope = {item.var: value}
                if item.kind == "interface":
                    scope["~" + item.var] = partners.get(value, None) or fresh()
                run_body(item.body, scope)
        else:
            raise InstantiationError(f"unknown template item {item!r}")

    removed = tuple(agent for _pp, _path, agent in match.agents)
    return Delta(
        remove=removed,
        anchor=match.first_agent,
        add_agents=tuple(add_agents),
        add_wires=tuple(add_wires),
        new_symbols=tuple(new_symbols.values()),
        rule_name=rule.name,
        location=path_str(match.location),
    )


# ---------------------------------------------------------------------------
# Static ruleset checks


def _rhs_label_counts(rule: Rule) -> tuple[dict[str, int], dict[str, float], set[str]]:
    """(explicit var counts, per-element block counts, generator-local vars).

    Block keys: "V:<name>" for vector vars, "I:<name>" for a subnet's
    once-occurring labels, "P:<name>" for their fresh partners.
    """
    counts: dict[str, int] = {}
    blocks: dict[str, float] = {}
    local_vars: set[str] = set()
    cuts = cut_sources(rule)

    def count_agent(tpl: TemplateAgent, ctx: Optional[Generator]) -> None:
        for var in (tpl.principal, *_slot_vars(tpl.external), *_slot_vars(tpl.internal)):
            count_var(var, ctx)
        for slot in (tpl.external, tpl.internal):
            if isinstance(slot, VectorVar):
                blocks["V:" + slot.name] = blocks.get("V:" + slot.name, 0) + 1
        if isinstance(tpl.children, SubnetVar):
            count_splice(tpl.children.name)
        else:
            for child in tpl.children:
                count_agent(child, ctx)

    def count_splice(name: str) -> None:
        key = ("P:" if name in cuts else "I:") + name
        blocks[key] = blocks.get(key, 0) + 1

    def count_var(var: str, ctx: Optional[Generator]) -> None:
        if ctx is not None:
            if var == ctx.var:
                key = ("V:" if ctx.kind == "vector" else "I:") + ctx.source
                blocks[key] = blocks.get(key, 0) + 1
                return
            if var == "~" + ctx.var:
                blocks["P:" + ctx.source] = blocks.get("P:" + ctx.source, 0) + 1
                return
            local_vars.add(var)
            counts[f"{id(ctx)}:{var}"] = counts.get(f"{id(ctx)}:{var}", 0) + 1
            return
        counts[var] = counts.get(var, 0) + 1

    for item in rule.rhs:
        if isinstance(item, TemplateAgent):
            count_agent(item, None)
        elif isinstance(item, TemplateWire):
            count_var(item.a, None)
            count_var(item.b, None)
        elif isinstance(item, Splice):
            count_splice(item.name)
        elif isinstance(item, Generator):
            for sub in item.body:
                if isinstance(sub, TemplateAgent):
                    count_agent(sub, item)
                else:
                    count_var(sub.a, item)
                    count_var(sub.b, item)
    return counts, blocks, local_vars


def check_rule(rule: Rule) -> list[Violation]:
    bad: list[Violation] = []
    where = f"rule {rule.name}"
    lhs_counts = lhs_label_counts(rule)
    vectors, subnets, _symbols = bound_metavars(rule)

    for var, n in lhs_counts.items():
        if n > 2:
            bad.append(
                Violation("label-overuse", f"pattern uses label {var} {n} times", where)
            )
    if rule.kind == ACTIVE and anchor_info(rule) is None:
        bad.append(
            Violation(
                "anchor-missing",
                "active rule needs exactly one label occurring twice as a principal port",
                where,
            )
        )

    rhs_counts, blocks, _locals = _rhs_label_counts(rule)

    # Explicit label variables: a free port must stay free, an internal pair
    # must be consumed whole or preserved whole; fresh names must pair up.
    seen_vars = set(lhs_counts) | {v for v in rhs_counts if ":" not in v}
    for var in sorted(seen_vars):
        l = lhs_counts.get(var, 0)
        r = rhs_counts.get(var, 0)
        ok = (l, r) in {(1, 1), (2, 2), (2, 0), (0, 2), (0, 0)}
        if not ok:
            bad.append(
                Violation(
                    "interface-violation",
                    f"label {var} occurs {l} time(s) on the left and {r} on the right",
                    where,
                )
            )
    # Labels bound on the left have one fixed target; repeating them per
    # generator iteration would multiply that label's occurrences.
    for var in sorted(_locals & set(lhs_counts)):
        bad.append(
            Violation(
                "interface-violation",
                f"label {var} is bound on the left but used inside a generator body",
                where,
            )
        )
    # Generator-local fresh labels must pair up within one iteration.
    for key, n in rhs_counts.items():
        if ":" in key and n != 2:
            var = key.split(":", 1)[1]
            if var in lhs_counts:
                continue  # already reported above
            bad.append(
                Violation(
                    "interface-violation",
                    f"generator-local label {var} occurs {n} time(s) per iteration",
                    where,
                )
            )

    for name in sorted(vectors):
        r = blocks.get("V:" + name, 0)
        if r != 1:
            bad.append(
                Violation(
                    "interface-violation",
                    f"vector {name} emitted {r} time(s); its ports are free and must "
                    f"appear exactly once",
                    where,
                )
            )
    for name in sorted(subnets):
        if subnet_splice_count(rule, name) > 1:
            bad.append(
                Violation("subnet-duplication", f"subnet {name} spliced more than once", where)
            )
        r = blocks.get("I:" + name, 0)
        if r != 1:
            bad.append(
                Violation(
                    "interface-violation",
                    f"subnet {name}'s loose ends covered {r} time(s), need exactly 1",
                    where,
                )
            )
        p = blocks.get("P:" + name, 0)
        if p not in (0, 2):
            bad.append(
                Violation(
                    "interface-violation",
                    f"fresh partners for subnet {name} occur {p} time(s), need 0 or 2",
                    where,
                )
            )
    for key in blocks:
        kind, name = key.split(":", 1)
        if kind == "V" and name not in vectors:
            bad.append(
                Violation("unbound-metavariable", f"vector {name} not bound on the left", where)
            )
        if kind in ("I", "P") and name not in subnets:
            bad.append(
                Violation("unbound-metavariable", f"subnet {name} not bound on the left", where)
            )
    return bad


def check_ruleset(ruleset: RuleSet) -> ValidationReport:
    bad: list[Violation] = []
    for rule in ruleset.rules:
        bad.extend(check_rule(rule))

    # Pair discipline: within each specificity rank, no two active rules may
    # claim a common symbol pair unless a more specific rule resolves it.
    exact_pairs: dict[frozenset[str], list[Rule]] = {}
    semi: list[tuple[str, Rule]] = []
    diag: list[Rule] = []
    offdiag: list[Rule] = []
    for rule in ruleset.rules:
        if rule.kind != ACTIVE:
            continue
        info = anchor_info(rule)
        if info is None:
            continue
        a, b = info.pair
        if a is not None and b is not None:
            exact_pairs.setdefault(frozenset((a, b)), []).append(rule)
        elif a is not None or b is not None:
            semi.append((a if a is not None else b, rule))  # type: ignore[arg-type]
        elif info.diagonal:
            diag.append(rule)
        else:
            offdiag.append(rule)

    for pair, rs in exact_pairs.items():
        if len(rs) > 1:
            names = ", ".join(r.name for r in rs)
            bad.append(
                Violation(
                    "duplicate-pair-rule",
                    f"rules {names} all target the pair {set(pair)}",
                    "ruleset",
                )
            )
    for (c1, r1), (c2, r2) in itertools.combinations(semi, 2):
        if c1 == c2:
            bad.append(
                Violation(
                    "duplicate-pair-rule",
                    f"rules {r1.name} and {r2.name} both match every pair containing {c1}",
                    "ruleset",
                )
            )
        elif frozenset((c1, c2)) not in exact_pairs:
            bad.append(
                Violation(
                    "duplicate-pair-rule",
                    f"rules {r1.name} and {r2.name} overlap on the pair {{{c1}, {c2}}} "
                    f"and no exact rule resolves it",
                    "ruleset",
                )
            )
    for group, what in ((diag, "equal-symbol"), (offdiag, "distinct-symbol")):
        if len(group) > 1:
            names = ", ".join(r.name for r in group)
            bad.append(
                Violation(
                    "duplicate-pair-rule",
                    f"rules {names} all match every {what} pair",
                    "ruleset",
                )
            )
    return ValidationReport(tuple(bad))
