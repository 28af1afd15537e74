"""Text formats: parsing, printing, round-trips, error positions."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binets.core import iso, labels, validate
from binets.rules import INACTIVE, SubnetVar, SymbolVar, VectorVar
from binets.syntax import ParseError, parse_binet, parse_rules, print_binet

from _gen import random_net


class TestParseBinet:
    def test_slot_abbreviations(self):
        n = parse_binet("A^x(a, b)\nB^y(c | d)\nC^z(e | f | D^g())")
        a, b, c = n.agents
        assert (a.external, a.internal, a.children) == (("a", "b"), (), ())
        assert (b.external, b.internal) == (("c",), ("d",))
        assert c.children[0].symbol.name == "D"

    def test_empty_markers(self):
        n = parse_binet("A^x(∅ | ∅ | ∅)\nB^x()")
        assert n.agents[0].symbol.arity == (0, 0)

    def test_glyph_aliases(self):
        n = parse_binet("@^x(a, b)\nε^a()\n⊥^b()")
        assert [a.symbol.name for a in n.agents] == ["App", "eps", "bot"]

    def test_arrow_alias_is_abs(self):
        n = parse_binet("->^x(a | b)\nA^x(c)", validate=False)
        assert n.agents[0].symbol.name == "Abs"

    def test_sig_declares_arity(self):
        n = parse_binet("sig A(1, 2)\nA^x(a, b | i)\nB^i()")
        assert n.signature.get("A").arity == (1, 2)

    def test_arity_inferred_from_first_use(self):
        n = parse_binet("A^x(a, b)\nC^x()")
        assert n.signature.get("A").arity == (0, 2)

    def test_sig_conflict_rejected(self):
        with pytest.raises(ParseError, match="redeclared"):
            parse_binet("sig A(0, 1)\nsig A(0, 2)")

    def test_use_conflict_rejected(self):
        with pytest.raises(ParseError, match="first used with arity"):
            parse_binet("A^x(a)\nA^y(b, c)")

    def test_fresh_namespace_reserved(self):
        with pytest.raises(ParseError, match="reserved"):
            parse_binet("A^%3(b)")

    def test_error_position(self):
        try:
            parse_binet("A^x(")
        except ParseError as err:
            assert err.line == 1 and err.col == 5
        else:
            pytest.fail("expected a parse error")

    def test_invalid_net_reported(self):
        with pytest.raises(ParseError, match="label-overuse") as err:
            parse_binet("A^x(x)\nA^x(y)\nB^x()")
        assert not err.value.report.ok

    def test_validate_false_skips_checks(self):
        n = parse_binet("A^x(x)\nA^x(y)\nB^x()", validate=False)
        assert not validate(n).ok

    def test_wires(self):
        n = parse_binet("A^x(a)\nx-b\na-c")
        assert [(w.a, w.b) for w in n.wires] == [("x", "b"), ("a", "c")]

    def test_comments_and_commas(self):
        n = parse_binet("# heading\nA^x(a), B^x()  # trailing\n")
        assert len(n.agents) == 2

    def test_newlines_inside_parens(self):
        n = parse_binet("A^x(a,\n  b)\nB^x()")
        assert n.agents[0].external == ("a", "b")


class TestPrintBinet:
    def test_empty_net_prints_empty(self):
        assert print_binet(parse_binet("")) == ""

    def test_canonical_fixpoint(self):
        text = "B^x()\nA^x(a, b)"
        once = print_binet(parse_binet(text))
        assert print_binet(parse_binet(once)) == once

    def test_sig_lines_only_for_used_symbols(self):
        n = parse_binet("sig A(0, 2)\nsig Unused(0, 0)\nA^x(a, b)")
        out = print_binet(n)
        assert "sig A(0, 2)" in out
        assert "Unused" not in out

    def test_fresh_labels_renamed(self):
        from binets.core import Agent, AgentSymbol, Binet, Signature

        sym = AgentSymbol("A", 0, 1)
        n = Binet(
            (Agent(sym, "%0", ("%4",)), Agent(sym, "%4", ("q",))),
            (),
            Signature((sym,)),
        )
        out = print_binet(n)
        assert "%" not in out
        reparsed = parse_binet(out)
        assert iso(n, reparsed)

    def test_round_trip_corpus_texture(self):
        text = "sig M(0, 1)\n\nM^a(c)\n"
        assert print_binet(parse_binet(text)) == text

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 100_000))
    def test_round_trip_random(self, seed):
        n = random_net(random.Random(seed))
        assert iso(parse_binet(print_binet(n)), n)


class TestParseRules:
    def test_rule_names_and_order(self):
        rs = parse_rules(
            "sig A(0,1)\nsig B(0,1)\n"
            "rule one: A^x(a), B^x(b) => a-b\n"
            "A^x(a), A^x(b) => a-b\n"
        )
        assert [r.name for r in rs.rules] == ["one", "r1"]
        assert [r.index for r in rs.rules] == [0, 1]

    def test_priority(self):
        rs = parse_rules("sig A(0,1)\nrule r priority 7: A^x(a), A^x(b) => a-b")
        assert rs.rules[0].priority == 7

    def test_inactive_arrow(self):
        rs = parse_rules("sig M(0,1)\nrule c: M^a(b) =>inactive a-b")
        assert rs.rules[0].kind == INACTIVE

    def test_unicode_arrows(self):
        rs = parse_rules("sig A(0,1)\nrule r: A^x(a), A^x(b) ⇒ a-b")
        assert rs.rules[0].kind == "active"

    def test_metavariable_kinds(self):
        rs = parse_rules(
            "sig M(0,1)\nrule r: M^a(b | | X), ?alpha^a(Y) => ?alpha_M^b(Y | | X)"
        )
        rule = rs.rules[0]
        assert isinstance(rule.lhs[0].children, SubnetVar)
        assert isinstance(rule.lhs[1].symbol, SymbolVar)
        assert isinstance(rule.lhs[1].external, VectorVar)

    def test_empty_rhs(self):
        rs = parse_rules("sig bot(0,0)\nrule r: bot^x(), bot^x() =>")
        assert rs.rules[0].rhs == ()

    def test_wire_rejected_in_lhs(self):
        with pytest.raises(ParseError, match="wires are not allowed in patterns"):
            parse_rules("sig A(0,1)\nrule r: a-b => A^a(b)")

    def test_fresh_must_occur_twice(self):
        with pytest.raises(ParseError, match="exactly twice"):
            parse_rules("sig A(0,1)\nrule r: A^x(a), A^x(b) => A^a(w), A^b(v)")

    def test_unbound_splice_rejected(self):
        with pytest.raises(ParseError, match="unbound subnet"):
            parse_rules("sig A(0,1)\nrule r: A^x(a), A^x(b) => X")

    def test_tilde_outside_generator_rejected(self):
        with pytest.raises(ParseError, match="foreach"):
            parse_rules("sig A(0,1)\nrule r: A^x(a), A^x(b) => A^a(~q), A^b(~q)")

    def test_unbound_derived_base_rejected(self):
        with pytest.raises(ParseError, match="unbound symbol"):
            parse_rules("sig B(0,1)\nrule r: ?a^x(Y), B^x(b) => ?beta_M^b(Y)")

    def test_vector_must_fill_slot(self):
        with pytest.raises(ParseError, match="whole slot"):
            parse_rules("sig A(0,2)\nrule r: A^x(Y, a), A^x(b, c) => a-b, Y-c")

    def test_generator_forms(self):
        rs = parse_rules(
            "sig A(0,1)\nsig eps(0,0)\n"
            "rule opt: eps^a(), A^a(b | | X) => eps^b(), "
            "foreach x unique-in L(X): eps^x()\n"
            "rule naive: eps^a(), A^a(b | | X) => eps^b(), X, "
            "foreach x in I(X): eps^x(), eps^~x()\n"
        )
        opt, naive = rs.rules
        gen_opt = [t for t in opt.rhs if type(t).__name__ == "Generator"]
        gen_naive = [t for t in naive.rhs if type(t).__name__ == "Generator"]
        assert gen_opt[0].kind == "unique"
        assert gen_naive[0].kind == "interface"

    def test_signature_collected(self):
        rs = parse_rules("sig A(0, 1)\nrule r: A^x(a), A^x(b) => a-b")
        assert rs.signature.get("A").arity == (0, 1)

    def test_bundled_corpus_parses_clean(self):
        from importlib import resources

        from binets.rules import check_ruleset

        for name in ("rho.rules", "rho_naive.rules", "nat.rules"):
            text = resources.files("binets.corpus").joinpath(name).read_text("utf-8")
            rs = parse_rules(text)
            assert check_ruleset(rs).ok, name
