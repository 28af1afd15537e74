"""Domain model: validation, occurrences, interface, iso, views."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binets.core import (
    Agent,
    AgentSymbol,
    Binet,
    InvalidBinetError,
    Signature,
    SignatureError,
    Wire,
    find_iso,
    from_views,
    interface,
    iso,
    iter_agents,
    labels,
    link_view,
    occurrences,
    place_view,
    rename_binet,
    require_valid,
    sorted_binet,
    validate,
)

from _gen import RHO_SYMBOLS, random_net
from _oracle import brute_interface

A = AgentSymbol("A", 0, 2)
B = AgentSymbol("B", 1, 1)
C = AgentSymbol("C", 0, 0)
SIG = Signature((A, B, C))


def net(*agents: Agent, wires: tuple[Wire, ...] = (), sig: Signature = SIG) -> Binet:
    return Binet(tuple(agents), wires, sig)


class TestSignature:
    def test_lookup_and_contains(self):
        assert SIG.get("A") is A
        assert "B" in SIG
        assert SIG.get("missing") is None

    def test_conflicting_arities_rejected(self):
        with pytest.raises(SignatureError):
            Signature((A, AgentSymbol("A", 1, 1)))

    def test_merge_is_set_union(self):
        other = Signature((C, AgentSymbol("D", 0, 1)))
        merged = SIG.merge(other)
        assert {s.name for s in merged} == {"A", "B", "C", "D"}

    def test_merge_conflict_rejected(self):
        with pytest.raises(SignatureError):
            SIG.merge(Signature((AgentSymbol("C", 2, 0),)))

    def test_arity_property(self):
        assert B.arity == (1, 1)


class TestValidate:
    def test_valid_net(self):
        good = net(Agent(A, "x", ("a", "b")), Agent(C, "x"))
        assert validate(good).ok
        require_valid(good)

    def test_label_overuse(self):
        bad = net(Agent(A, "x", ("x", "x")))
        report = validate(bad)
        assert not report.ok
        assert any(v.code == "label-overuse" for v in report.violations)

    def test_arity_mismatch(self):
        bad = net(Agent(A, "x", ("a",)))
        assert any(v.code == "arity-mismatch" for v in validate(bad).violations)

    def test_undeclared_symbol(self):
        rogue = AgentSymbol("Rogue", 0, 0)
        bad = net(Agent(rogue, "x"))
        assert any(v.code == "undeclared-symbol" for v in validate(bad).violations)

    def test_wire_self_loop(self):
        bad = net(Agent(C, "x"), wires=(Wire("y", "y"),))
        assert any(v.code == "wire-self-loop" for v in validate(bad).violations)

    def test_require_valid_raises_with_report(self):
        bad = net(Agent(A, "x", ("x", "x")))
        with pytest.raises(InvalidBinetError) as err:
            require_valid(bad)
        assert not err.value.report.ok

    def test_violations_carry_paths(self):
        bad = net(Agent(B, "x", ("a",), ("i",), (Agent(A, "y", ()),)))
        report = validate(bad)
        assert any(
            v.code == "arity-mismatch" and v.where == "/0/0"
            for v in report.violations
        )


class TestOccurrencesAndInterface:
    def test_occurrence_kinds(self):
        n = net(
            Agent(B, "p", ("e",), ("i",), (Agent(C, "i"),)),
            wires=(Wire("e", "w"),),
        )
        occ = occurrences(n)
        assert {r.kind for r in occ["p"]} == {"principal"}
        assert {r.kind for r in occ["e"]} == {"external", "wire"}
        assert {r.kind for r in occ["i"]} == {"internal", "principal"}
        assert [r.kind for r in occ["w"]] == ["wire"]

    def test_interface_is_once_occurring(self):
        n = net(Agent(A, "x", ("a", "b")), Agent(C, "x"))
        assert interface(n) == frozenset({"a", "b"})

    def test_interface_matches_brute_force(self):
        rng = random.Random(11)
        for _ in range(100):
            n = random_net(rng)
            assert interface(n) == brute_interface(n)

    def test_labels(self):
        n = net(Agent(C, "x"), wires=(Wire("u", "v"),))
        assert labels(n) == frozenset({"x", "u", "v"})

    def test_iter_agents_paths(self):
        inner = Agent(C, "c")
        n = net(Agent(B, "p", ("e",), ("i",), (inner,)), Agent(C, "q"))
        seen = {path: agent.symbol.name for path, agent, _ in iter_agents(n)}
        assert seen == {(0,): "B", (0, 0): "C", (1,): "C"}


class TestIso:
    def test_renaming_is_iso(self):
        n = net(Agent(A, "x", ("a", "b")), Agent(C, "x"))
        m = rename_binet(n, {"x": "q", "a": "r", "b": "s"})
        witness = find_iso(n, m)
        assert witness is not None
        assert witness["x"] == "q"

    def test_sibling_order_ignored(self):
        n = net(Agent(C, "x"), Agent(A, "x", ("a", "b")))
        m = net(Agent(A, "x", ("a", "b")), Agent(C, "x"))
        assert iso(n, m)

    def test_port_order_respected(self):
        n = net(Agent(A, "x", ("a", "b")), Agent(C, "a"), Agent(C, "x"))
        m = net(Agent(A, "x", ("a", "b")), Agent(C, "b"), Agent(C, "x"))
        assert not iso(n, m)

    def test_principal_assignment_respected(self):
        one = net(Agent(B, "p", ("e",), ("i",)), Agent(C, "p"))
        two = net(Agent(B, "e", ("p",), ("i",)), Agent(C, "p"))
        assert not iso(one, two)

    def test_nesting_respected(self):
        flat = net(Agent(B, "p", ("e",), ("i",)), Agent(C, "q"))
        boxed = net(Agent(B, "p", ("e",), ("i",), (Agent(C, "q"),)))
        assert not iso(flat, boxed)

    def test_symbol_mismatch(self):
        assert not iso(net(Agent(C, "x")), net(Agent(AgentSymbol("D", 0, 0), "x"), sig=Signature((AgentSymbol("D", 0, 0),))))

    def test_wire_orientation_ignored(self):
        n = net(Agent(C, "x"), wires=(Wire("x", "y"),))
        m = net(Agent(C, "x"), wires=(Wire("y", "x"),))
        assert iso(n, m)

    def test_label_bijection_required(self):
        # two free ports cannot collapse onto one
        n = net(Agent(A, "x", ("a", "b")))
        m = net(Agent(A, "x", ("a", "a")))
        assert not iso(n, m)
        assert not iso(m, n)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_rename_and_shuffle_is_iso(self, seed):
        rng = random.Random(seed)
        n = random_net(rng)
        perm = {lab: f"r{i}" for i, lab in enumerate(sorted(labels(n)))}
        m = rename_binet(n, perm)
        shuffled_roots = list(m.agents)
        rng.shuffle(shuffled_roots)
        m = Binet(tuple(shuffled_roots), m.wires, m.signature)
        assert iso(n, m)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_dropping_an_agent_breaks_iso(self, seed):
        rng = random.Random(seed)
        n = random_net(rng, max_agents=6)
        if not n.agents:
            return
        m = Binet(n.agents[1:], n.wires, n.signature)
        assert not iso(n, m)


class TestViews:
    def test_round_trip_through_views(self):
        rng = random.Random(3)
        for _ in range(50):
            n = random_net(rng)
            rebuilt = from_views(place_view(n), link_view(n), n.signature)
            assert iso(n, rebuilt)
            assert validate(rebuilt).ok

    def test_place_view_shape(self):
        n = net(Agent(B, "p", ("e",), ("i",), (Agent(C, "c"),)))
        place = place_view(n)
        assert len(place) == 1
        assert place[0].symbol == "B"
        assert place[0].children[0].symbol == "C"
        assert place[0].children[0].path == (0, 0)

    def test_link_view_has_every_label(self):
        n = net(Agent(A, "x", ("a", "b")), Agent(C, "x"))
        assert set(link_view(n)) == {"x", "a", "b"}


class TestSortedBinet:
    def test_canonical_order_is_stable(self):
        n = net(Agent(C, "x"), Agent(A, "x", ("a", "b")))
        m = net(Agent(A, "x", ("a", "b")), Agent(C, "x"))
        assert [a.symbol.name for a in sorted_binet(n).agents] == [
            a.symbol.name for a in sorted_binet(m).agents
        ]

    def test_sorted_is_iso(self):
        rng = random.Random(5)
        for _ in range(30):
            n = random_net(rng)
            assert iso(n, sorted_binet(n))
