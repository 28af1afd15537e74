"""Brute-force reference implementations the library is checked against.

These re-derive matching, the active-pair census and the interface straight
from the definitions, with no shared machinery beyond the AST types.
"""

from __future__ import annotations

from typing import Optional

from binets.core import Binet, iter_agents
from binets.rules import (
    Match,
    PatternAgent,
    Rule,
    RuleSet,
    SubnetVar,
    SymbolVar,
    VectorVar,
    anchor_info,
)

Fingerprint = tuple


def match_fingerprint(m: Match) -> Fingerprint:
    return (
        frozenset(id(a) for _pp, _p, a in m.agents),
        tuple(sorted(m.labels.items())),
        tuple(sorted((k, s.name) for k, s in m.symbols.items())),
        tuple(sorted(m.vectors.items())),
        tuple(
            sorted((k, tuple(id(a) for a in v)) for k, v in m.subnets.items())
        ),
    )


def _bound(mapping: dict, key, value) -> Optional[dict]:
    if key in mapping:
        return mapping if mapping[key] == value else None
    out = dict(mapping)
    out[key] = value
    return out


def _match_agent(pat: PatternAgent, patpath, path, agent, st):
    st = dict(st)
    if isinstance(pat.symbol, SymbolVar):
        symbols = _bound(st["symbols"], pat.symbol.name, agent.symbol.name)
        if symbols is None:
            return
        if len(set(symbols.values())) != len(symbols):
            return
        st["symbols"] = symbols
    elif agent.symbol.name != pat.symbol:
        return

    labels = _bound(st["labels"], pat.principal, agent.principal)
    if labels is None:
        return
    st["labels"] = labels
    for slot, have in ((pat.external, agent.external), (pat.internal, agent.internal)):
        if isinstance(slot, VectorVar):
            vectors = _bound(st["vectors"], slot.name, have)
            if vectors is None:
                return
            st["vectors"] = vectors
        else:
            if len(slot) != len(have):
                return
            for var, lab in zip(slot, have):
                labels = _bound(st["labels"], var, lab)
                if labels is None:
                    return
                st["labels"] = labels

    st["assignment"] = st["assignment"] + ((patpath, path, agent),)
    st["used"] = st["used"] | {id(agent)}

    if isinstance(pat.children, SubnetVar):
        paths = tuple(path + (i,) for i in range(len(agent.children)))
        key = pat.children.name
        prior = st["subnets"].get(key)
        if prior is not None and prior != (agent.children, paths):
            return
        subnets = dict(st["subnets"])
        subnets[key] = (agent.children, paths)
        st["subnets"] = subnets
        yield st
        return
    if len(pat.children) != len(agent.children):
        return
    yield from _match_forest(pat.children, 0, agent, path, patpath, st, frozenset())


def _match_forest(pats, k, agent, path, patpath, st, taken):
    if k == len(pats):
        yield st
        return
    for i, child in enumerate(agent.children):
        if i in taken or id(child) in st["used"]:
            continue
        for st2 in _match_agent(pats[k], patpath + (k,), path + (i,), child, st):
            yield from _match_forest(pats, k + 1, agent, path, patpath, st2, taken | {i})


def brute_matches(
    rule: Rule, binet: Binet, ruleset: Optional[RuleSet] = None
) -> set[Fingerprint]:
    entries = [(path, agent) for path, agent, _parent in iter_agents(binet)]
    states = [
        {
            "labels": {},
            "vectors": {},
            "symbols": {},
            "subnets": {},
            "used": frozenset(),
            "assignment": (),
        }
    ]
    for k, pat in enumerate(rule.lhs):
        grown = []
        for st in states:
            for path, agent in entries:
                if id(agent) in st["used"]:
                    continue
                grown.extend(_match_agent(pat, (k,), path, agent, st))
        states = grown

    info = anchor_info(rule)
    out: set[Fingerprint] = set()
    for st in states:
        roots = [p for _children, paths in st["subnets"].values() for p in paths]
        if any(
            path[: len(root)] == root
            for _pp, path, _agent in st["assignment"]
            for root in roots
        ):
            continue
        if info is not None and ruleset is not None:
            by_pp = {pp: agent for pp, _p, agent in st["assignment"]}
            a = by_pp[info.carriers[0]].symbol.name
            b = by_pp[info.carriers[1]].symbol.name
            if ruleset.active_rule_for(a, b) is not rule:
                continue
        out.add(
            (
                frozenset(id(a) for _pp, _p, a in st["assignment"]),
                tuple(sorted(st["labels"].items())),
                tuple(sorted(st["symbols"].items())),
                tuple(sorted(st["vectors"].items())),
                tuple(
                    sorted(
                        (name, tuple(id(a) for a in children))
                        for name, (children, _paths) in st["subnets"].items()
                    )
                ),
            )
        )
    return out


def brute_pairs(binet: Binet) -> dict[str, tuple[str, str]]:
    """Labels used twice as a principal port, with the two symbol names."""
    at: dict[str, list[str]] = {}
    for _path, agent, _parent in iter_agents(binet):
        at.setdefault(agent.principal, []).append(agent.symbol.name)
    return {
        label: (syms[0], syms[1]) for label, syms in at.items() if len(syms) == 2
    }


def brute_interface(binet: Binet) -> frozenset[str]:
    counts: dict[str, int] = {}

    def see(label: str) -> None:
        counts[label] = counts.get(label, 0) + 1

    for _path, agent, _parent in iter_agents(binet):
        see(agent.principal)
        for label in agent.external:
            see(label)
        for label in agent.internal:
            see(label)
    for wire in binet.wires:
        see(wire.a)
        see(wire.b)
    return frozenset(label for label, n in counts.items() if n == 1)
