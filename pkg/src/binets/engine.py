"""Four-phase reduction: collect candidates, prioritise a safe set, rewrite,
tidy wires.

One pass: collect every active pair (a label occurring twice as a principal
port) and every inactive-rule match, order them by strategy, greedily admit
candidates whose regions are disjoint, apply all admitted rewrites, then
eliminate wires.  A candidate's region is the set of matched agent positions
plus everything nested below a bound subnet; regions are downward closed, so
plain set intersection detects every overlap.

Safe-set members commute: each rewrite is addressed by agent identity, not
by position, so applying them in any sequential order (or merged in one
sweep) yields the same net.  The fresh-label allocator is lock-guarded and
the merge order is fixed, which keeps passes deterministic and allows the
instantiation work itself to be farmed out concurrently.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Agent,
    Binet,
    InvalidBinetError,
    Label,
    Signature,
    Wire,
    is_fresh_label,
    iter_agents,
    occurrences,
    path_str,
    rename_binet,
    require_valid,
    validate,
)
from .rules import Delta, FreshLabels, Match, RuleSet, instantiate, match_pattern

DETERMINISTIC = "deterministic"
WEIGHTED = "weighted"
STOCHASTIC = "stochastic"

NORMAL_FORM = "normal-form"
STEP_LIMIT = "step-limit"


class EngineError(RuntimeError):
    pass


class ConflictDetected(EngineError):
    """Two admitted rewrites touched the same agent: a prioritise bug."""


class StepLimitExceeded(EngineError):
    def __init__(self, trace: "ReductionTrace"):
        self.trace = trace
        super().__init__(trace.detail)


@dataclass(frozen=True)
class Strategy:
    """How prioritise orders candidates before the greedy admission sweep.

    deterministic: inactive candidates first, then rule order in the file,
    then leftmost-outermost position.  weighted: higher rule priority first,
    ties broken deterministically.  stochastic: seeded shuffle.  With
    maximal=False a pass admits a single candidate.
    """

    kind: str = DETERMINISTIC
    seed: Optional[int] = None
    maximal: bool = True

    def __post_init__(self) -> None:
        if self.kind not in (DETERMINISTIC, WEIGHTED, STOCHASTIC):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == STOCHASTIC and self.seed is None:
            raise ValueError("stochastic strategy needs a seed")

    @classmethod
    def deterministic(cls, maximal: bool = True) -> "Strategy":
        return cls(DETERMINISTIC, None, maximal)

    @classmethod
    def weighted(cls, maximal: bool = True) -> "Strategy":
        return cls(WEIGHTED, None, maximal)

    @classmethod
    def stochastic(cls, seed: int, maximal: bool = True) -> "Strategy":
        return cls(STOCHASTIC, seed, maximal)


@dataclass(frozen=True)
class StuckPair:
    """An active pair no rule covers: inert data, reported not rewritten."""

    label: Label
    symbols: tuple[str, str]
    reason: str


@dataclass(frozen=True)
class Candidates:
    active: tuple[Match, ...]
    inactive: tuple[Match, ...]
    stuck: tuple[StuckPair, ...]

    @property
    def active_pairs(self) -> tuple[Label, ...]:
        return tuple(sorted({m.anchor_label for m in self.active if m.anchor_label}))

    def __bool__(self) -> bool:
        return bool(self.active or self.inactive)


def collect(binet: Binet, ruleset: RuleSet) -> Candidates:
    """Find active pairs with their selected rules, plus inactive matches."""
    principal_at: dict[Label, list[Agent]] = {}
    for _path, agent, _parent in iter_agents(binet):
        principal_at.setdefault(agent.principal, []).append(agent)
    pairs: dict[Label, tuple[str, str]] = {}
    for label, agents in sorted(principal_at.items()):
        if len(agents) == 2:
            pairs[label] = (agents[0].symbol.name, agents[1].symbol.name)

    needed: list = []
    for label, (a, b) in pairs.items():
        rule = ruleset.active_rule_for(a, b)
        if rule is not None and rule not in needed:
            needed.append(rule)

    active: list[Match] = []
    matched_anchors: set[Label] = set()
    for rule in needed:
        for m in match_pattern(rule, binet, ruleset):
            if m.anchor_label in pairs:
                active.append(m)
                matched_anchors.add(m.anchor_label)

    stuck: list[StuckPair] = []
    for label, (a, b) in pairs.items():
        if label in matched_anchors:
            continue
        rule = ruleset.active_rule_for(a, b)
        reason = (
            f"no rule for the pair ({a}, {b})"
            if rule is None
            else f"rule {rule.name} does not match the pair's context"
        )
        stuck.append(StuckPair(label, (a, b), reason))

    inactive: list[Match] = []
    for rule in ruleset.inactive_rules:
        inactive.extend(match_pattern(rule, binet, ruleset))

    active.sort(key=lambda m: (m.rule.index, m.sort_key()))
    inactive.sort(key=lambda m: (m.rule.index, m.sort_key()))
    return Candidates(tuple(active), tuple(inactive), tuple(stuck))


@dataclass(frozen=True)
class SafeSet:
    """A conflict-free selection of candidates, with the evidence regions."""

    members: tuple[Match, ...]
    regions: tuple[frozenset, ...]
    skipped: tuple[Match, ...] = ()


def _base_key(m: Match) -> tuple:
    return (0 if m.rule.kind == "inactive" else 1, m.rule.index, m.sort_key())


def prioritise(
    candidates: Candidates, binet: Binet, ruleset: RuleSet, strategy: Strategy
) -> SafeSet:
    pool = sorted(candidates.inactive + candidates.active, key=_base_key)
    if strategy.kind == WEIGHTED:
        pool.sort(key=lambda m: (-m.rule.priority, _base_key(m)))
    elif strategy.kind == STOCHASTIC:
        rng = random.Random(strategy.seed)
        rng.shuffle(pool)

    taken: list[Match] = []
    regions: list[frozenset] = []
    occupied: set = set()
    skipped: list[Match] = []
    for m in pool:
        if taken and not strategy.maximal:
            skipped.append(m)
            continue
        if occupied & m.region:
            skipped.append(m)
            continue
        taken.append(m)
        regions.append(m.region)
        occupied |= m.region
    return SafeSet(tuple(taken), tuple(regions), tuple(skipped))


def apply_deltas(binet: Binet, deltas: tuple[Delta, ...]) -> Binet:
    """Merge rewrites into one rebuild; identical to any sequential order."""
    removed: dict[int, bool] = {}
    for d in deltas:
        for agent in d.remove:
            if id(agent) in removed:
                raise ConflictDetected(
                    f"agent removed by two rewrites ({d.rule_name} at {d.location})"
                )
            removed[id(agent)] = False
    additions: dict[int, list[Agent]] = {}
    for d in deltas:
        additions.setdefault(id(d.anchor), []).extend(d.add_agents)

    def mark_subtree(agent: Agent) -> None:
        if id(agent) in removed:
            removed[id(agent)] = True
        for child in agent.children:
            mark_subtree(child)

    def walk(agents: tuple[Agent, ...]) -> tuple[Agent, ...]:
        out: list[Agent] = []
        pending: list[Agent] = []
        for agent in agents:
            if id(agent) in removed:
                removed[id(agent)] = True
                for child in agent.children:
                    mark_subtree(child)
                pending.extend(additions.pop(id(agent), ()))
                continue
            new_children = walk(agent.children)
            if new_children is not agent.children:
                agent = Agent(
                    agent.symbol, agent.principal, agent.external, agent.internal, new_children
                )
            out.append(agent)
        if not pending and all(a is b for a, b in zip(out, agents)) and len(out) == len(agents):
            return agents  # untouched: keep object identity for sharing
        out.extend(pending)
        return tuple(out)

    agents = walk(binet.agents)
    missing = [k for k, seen in removed.items() if not seen]
    if missing or additions:
        raise ConflictDetected(
            "a rewrite addressed agents that are no longer in the net"
        )
    wires = binet.wires + tuple(w for d in deltas for w in d.add_wires)
    signature = binet.signature
    for d in deltas:
        if d.new_symbols:
            signature = signature.merge(Signature(d.new_symbols))
    return Binet(agents, wires, signature)


def rewrite_pass(
    binet: Binet,
    safe_set: SafeSet,
    ruleset: RuleSet,
    fresh: FreshLabels,
) -> Binet:
    """Instantiate and merge every admitted rewrite.  No wire elimination."""
    occupied: set = set()
    for region in safe_set.regions:
        if occupied & region:
            raise ConflictDetected("safe set contains overlapping regions")
        occupied |= region
    deltas = tuple(instantiate(m.rule, m, fresh) for m in safe_set.members)
    result = apply_deltas(binet, deltas)
    report = validate(result)
    if not report.ok:
        raise EngineError(f"rewrite produced an invalid net: {report}")
    return result


def tidy(binet: Binet) -> Binet:
    """Eliminate wires by unifying their end labels.

    Wire chains collapse to a single link; a chain ending at an agent port
    takes the free extreme's name (so the interface is preserved exactly);
    closed wire loops vanish.  Free-standing wires between two otherwise
    unused labels remain: they carry interface ports.
    """
    if not binet.wires:
        return binet

    parent: dict[Label, Label] = {}

    def find(x: Label) -> Label:
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(x: Label, y: Label) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for wire in binet.wires:
        parent.setdefault(wire.a, wire.a)
        parent.setdefault(wire.b, wire.b)
        union(wire.a, wire.b)

    agent_occ: dict[Label, int] = {}
    wire_deg: dict[Label, int] = {}
    for label, refs in occurrences(binet).items():
        agent_occ[label] = sum(1 for r in refs if r.kind != "wire")
        wire_deg[label] = sum(1 for r in refs if r.kind == "wire")

    classes: dict[Label, list[Label]] = {}
    for label in parent:
        classes.setdefault(find(label), []).append(label)

    mapping: dict[Label, Label] = {}
    kept_wires: list[Wire] = []
    for root in sorted(classes, key=lambda r: min(classes[r])):
        members = classes[root]
        port_labels = sorted(
            (l for l in members if agent_occ.get(l, 0) > 0),
            key=lambda l: (is_fresh_label(l), l),
        )
        free_ends = sorted(l for l in members if agent_occ.get(l, 0) == 0 and wire_deg[l] == 1)
        if len(port_labels) == 2:
            keep, drop = port_labels
            mapping[drop] = keep
        elif len(port_labels) == 1:
            if free_ends:
                mapping[port_labels[0]] = free_ends[0]
            # else: a loop back onto the same agent's ports; both occurrences
            # are the wire's, so the label simply disappears with the wires
        else:
            if len(free_ends) == 2:
                kept_wires.append(Wire(free_ends[0], free_ends[1]))
            # no free ends: a closed wire cycle, dropped whole

    out = rename_binet(
        Binet(binet.agents, (), binet.signature), mapping
    )
    return Binet(out.agents, tuple(kept_wires), binet.signature)


@dataclass(frozen=True)
class Firing:
    rule: str
    location: str
    kind: str


@dataclass(frozen=True)
class PassRecord:
    index: int
    firings: tuple[Firing, ...]
    active_candidates: int
    inactive_candidates: int
    stuck: int
    interactions_after: int


@dataclass(frozen=True)
class ReductionTrace:
    snapshots: tuple[Binet, ...]
    passes: tuple[PassRecord, ...]
    termination: str
    interactions: int
    detail: str = ""

    @property
    def normal_form(self) -> Binet:
        return self.snapshots[-1]


def _seed_fresh(binet: Binet) -> FreshLabels:
    start = 0
    for label in occurrences(binet):
        m = re.fullmatch(r"%(\d+)", label)
        if m:
            start = max(start, int(m.group(1)) + 1)
    return FreshLabels(start)


def reduce(
    binet: Binet,
    ruleset: RuleSet,
    strategy: Optional[Strategy] = None,
    max_passes: Optional[int] = None,
    max_steps: Optional[int] = None,
) -> ReductionTrace:
    """Run collect/prioritise/rewrite/tidy passes to normal form or a limit.

    The trace records the tidied input as snapshot 0 and one snapshot per
    pass.  Interface labels are preserved across every snapshot.
    """
    if strategy is None:
        strategy = Strategy.deterministic()
    binet = Binet(binet.agents, binet.wires, binet.signature.merge(ruleset.signature))
    require_valid(binet)
    fresh = _seed_fresh(binet)
    current = tidy(binet)
    snapshots = [current]
    records: list[PassRecord] = []
    interactions = 0
    termination = NORMAL_FORM
    detail = ""
    while True:
        candidates = collect(current, ruleset)
        if not candidates:
            if candidates.stuck:
                names = ", ".join(
                    f"{p.symbols[0]}~{p.symbols[1]} at {p.label}"
                    for p in candidates.stuck
                )
                detail = f"normal form with stuck pairs: {names}"
            break
        if max_passes is not None and len(records) >= max_passes:
            termination = STEP_LIMIT
            detail = f"pass limit {max_passes} reached before normal form"
            break
        safe = prioritise(candidates, current, ruleset, strategy)
        if max_steps is not None and interactions + len(safe.members) > max_steps:
            termination = STEP_LIMIT
            detail = f"interaction limit {max_steps} reached before normal form"
            break
        current = tidy(rewrite_pass(current, safe, ruleset, fresh))
        interactions += len(safe.members)
        records.append(
            PassRecord(
                index=len(records),
                firings=tuple(
                    Firing(m.rule.name, path_str(m.location), m.rule.kind)
                    for m in safe.members
                ),
                active_candidates=len(candidates.active),
                inactive_candidates=len(candidates.inactive),
                stuck=len(candidates.stuck),
                interactions_after=interactions,
            )
        )
        snapshots.append(current)
    trace = ReductionTrace(
        tuple(snapshots), tuple(records), termination, interactions, detail
    )
    if termination == STEP_LIMIT:
        raise StepLimitExceeded(trace)
    return trace


def trace_tsv(trace: ReductionTrace) -> str:
    """One row per firing: pass, rule, location, kind, interactions so far."""
    lines = ["pass\trule\tlocation\tkind\tinteractions"]
    for record in trace.passes:
        for firing in record.firings:
            lines.append(
                f"{record.index}\t{firing.rule}\t{firing.location}"
                f"\t{firing.kind}\t{record.interactions_after}"
            )
    return "\n".join(lines) + "\n"
