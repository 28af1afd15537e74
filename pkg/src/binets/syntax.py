"""Text formats for nets and rule files.

Net files: `sig Name(i, e)` declarations (internal, external arity), agent
expressions `Sym^l(ext | int | children)` with the short forms `Sym^l(ext)`
and `Sym^l()`, and wires `a-b`.  Statements are separated by newlines or
top-level commas; `#` starts a comment.  The glyphs `->`/`→`, `@`, `ε`, `⊥`
are accepted as aliases for the symbol names Abs, App, eps, bot, and `∅`
marks an explicitly empty slot.

Rule files add `rule name [priority n]: lhs => rhs` statements (`=>inactive`
for rules that fire without an active pair).  In rules, lowercase names are
label variables, an uppercase name alone in a port slot binds the whole
vector, an uppercase name alone in a child slot binds the whole subnet,
`?name` binds a symbol, and `foreach x in I(X): ...` / `foreach x unique-in
L(X): ...` / `foreach y in Y: ...` expand a template body per element.

The engine's fresh-label namespace `%N` is rejected by the parser; the
printer renames such labels, so printed nets always re-parse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from . import core, rules as rl
from .core import Agent, AgentSymbol, Binet, Signature, Wire

SYMBOL_ALIASES = {"->": "Abs", "→": "Abs", "@": "App", "ε": "eps", "⊥": "bot"}


class ParseError(ValueError):
    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        col: Optional[int] = None,
        expected: tuple[str, ...] = (),
    ):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        loc = f"line {line}, col {col}: " if line is not None else ""
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{loc}{message}{hint}")


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
      (?P<comment>\#[^\n]*)
    | (?P<newline>\n)
    | (?P<ws>[ \t\r]+)
    | (?P<arrow_inactive>(?:=>|⇒)inactive\b)
    | (?P<arrow>=>|⇒)
    | (?P<absglyph>->|→)
    | (?P<fresh>%\d*)
    | (?P<int>\d+)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<glyph>[@ε⊥∅])
    | (?P<punct>[\^()|,\-:?~])
    """,
    re.VERBOSE,
)

_PUNCT_KINDS = {
    "^": "CARET",
    "(": "LP",
    ")": "RP",
    "|": "PIPE",
    ",": "COMMA",
    "-": "DASH",
    ":": "COLON",
    "?": "QMARK",
    "~": "TILDE",
}


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos, depth = 1, 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup or ""
        value = m.group()
        if kind == "newline":
            if depth == 0:
                tokens.append(Token("NEWLINE", value, line, col))
            line += 1
            col = 1
        else:
            if kind == "punct":
                kind = _PUNCT_KINDS[value]
                if kind == "LP":
                    depth += 1
                elif kind == "RP":
                    depth = max(0, depth - 1)
            elif kind in ("absglyph", "glyph") and value != "∅":
                kind = "NAME"
                value = SYMBOL_ALIASES[value]
            elif value == "∅":
                kind = "EMPTY"
            elif kind == "arrow_inactive":
                kind = "ARROW_INACTIVE"
            elif kind == "arrow":
                kind = "ARROW"
            elif kind == "int":
                kind = "INT"
            elif kind == "name":
                kind = "NAME"
            elif kind == "fresh":
                kind = "FRESH"
            if kind not in ("comment", "ws"):
                tokens.append(Token(kind, value, line, col))
            col += len(value)
        pos = m.end()
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _SigBuilder:
    """Accumulates declared and inferred symbol arities, first use wins."""

    def __init__(self) -> None:
        self.declared: dict[str, tuple[int, int]] = {}
        self.inferred: dict[str, tuple[int, int]] = {}
        self.order: list[str] = []

    def declare(self, name: str, internal: int, external: int, tok: Token) -> None:
        arity = (internal, external)
        for table in (self.declared, self.inferred):
            if name in table and table[name] != arity:
                raise ParseError(
                    f"symbol {name} redeclared with arity {arity}, "
                    f"previously {table[name]}",
                    tok.line,
                    tok.col,
                )
        if name not in self.declared:
            self.order.append(name)
        self.declared[name] = arity

    def use(self, name: str, internal: int, external: int, tok: Token) -> AgentSymbol:
        arity = (internal, external)
        if name in self.declared:
            if self.declared[name] != arity:
                raise ParseError(
                    f"{name} declared with {self.declared[name][1]} external and "
                    f"{self.declared[name][0]} internal ports, used with {external} "
                    f"and {internal}",
                    tok.line,
                    tok.col,
                )
        elif name in self.inferred:
            if self.inferred[name] != arity:
                raise ParseError(
                    f"{name} first used with arity {self.inferred[name]}, now {arity}",
                    tok.line,
                    tok.col,
                )
        else:
            self.inferred[name] = arity
            self.order.append(name)
        return AgentSymbol(name, internal, external)

    def signature(self) -> Signature:
        table = {**self.inferred, **self.declared}
        return Signature(
            tuple(AgentSymbol(n, *table[n]) for n in self.order)
        )


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        j = min(self.i + k, len(self.tokens) - 1)
        return self.tokens[j]

    def at(self, kind: str, value: Optional[str] = None, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind == kind and (value is None or tok.value == value)

    def take(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"found {tok.value!r}" if tok.value else "unexpected end of input",
                tok.line,
                tok.col,
                expected=(what,),
            )
        return self.take()

    def skip_seps(self) -> None:
        while self.peek().kind in ("NEWLINE", "COMMA"):
            self.take()

    def reject_fresh(self) -> None:
        tok = self.peek()
        if tok.kind == "FRESH":
            raise ParseError(
                f"{tok.value!r} is in the reserved fresh-label namespace %N",
                tok.line,
                tok.col,
            )

    def label(self) -> str:
        self.reject_fresh()
        return self.expect("NAME", "a label").value

    def parse_sig(self, sigs: _SigBuilder) -> None:
        self.take()  # 'sig'
        name_tok = self.expect("NAME", "a symbol name")
        self.expect("LP", "'('")
        internal = int(self.expect("INT", "the internal arity").value)
        self.expect("COMMA", "','")
        external = int(self.expect("INT", "the external arity").value)
        self.expect("RP", "')'")
        sigs.declare(name_tok.value, internal, external, name_tok)


# ---------------------------------------------------------------------------
# Net files


class _BinetParser(_Parser):
    def parse(self, validate: bool = True) -> Binet:
        sigs = _SigBuilder()
        agents: list[Agent] = []
        wires: list[Wire] = []
        self.skip_seps()
        while not self.at("EOF"):
            if self.at("NAME", "sig") and self.at("NAME", k=1):
                self.parse_sig(sigs)
            elif self.at("NAME") and self.at("CARET", k=1):
                agents.append(self.parse_agent(sigs))
            elif self.at("NAME") and self.at("DASH", k=1):
                a = self.label()
                self.take()  # '-'
                wires.append(Wire(a, self.label()))
            else:
                tok = self.peek()
                self.reject_fresh()
                raise ParseError(
                    f"found {tok.value!r}" if tok.value else "unexpected end of input",
                    tok.line,
                    tok.col,
                    expected=("a sig declaration", "an agent", "a wire"),
                )
            self.skip_seps()
        binet = Binet(tuple(agents), tuple(wires), sigs.signature())
        if validate:
            report = core.validate(binet)
            if not report.ok:
                err = ParseError(f"invalid net: {report}")
                err.report = report  # type: ignore[attr-defined]
                raise err
        return binet

    def parse_agent(self, sigs: _SigBuilder) -> Agent:
        name_tok = self.take()
        self.expect("CARET", "'^'")
        principal = self.label()
        self.expect("LP", "'('")
        external = self.parse_labels()
        internal: tuple[str, ...] = ()
        children: tuple[Agent, ...] = ()
        if self.at("PIPE"):
            self.take()
            internal = self.parse_labels()
        if self.at("PIPE"):
            self.take()
            children = self.parse_child_agents(sigs)
        self.expect("RP", "')'")
        sym = sigs.use(name_tok.value, len(internal), len(external), name_tok)
        return Agent(sym, principal, external, internal, children)

    def parse_labels(self) -> tuple[str, ...]:
        if self.at("EMPTY"):
            self.take()
            return ()
        out: list[str] = []
        while self.at("NAME") and not self.at("CARET", k=1):
            out.append(self.label())
            if self.at("COMMA"):
                self.take()
            else:
                break
        return tuple(out)

    def parse_child_agents(self, sigs: _SigBuilder) -> tuple[Agent, ...]:
        if self.at("EMPTY"):
            self.take()
            return ()
        out: list[Agent] = []
        while self.at("NAME") and self.at("CARET", k=1):
            out.append(self.parse_agent(sigs))
            if self.at("COMMA"):
                self.take()
            else:
                break
        return tuple(out)


def parse_binet(text: str, validate: bool = True) -> Binet:
    return _BinetParser(text).parse(validate=validate)


# ---------------------------------------------------------------------------
# Rule files


def _is_upper(name: str) -> bool:
    return name[:1].isupper()


class _RulesParser(_Parser):
    def __init__(self, text: str):
        super().__init__(text)
        self.sigs = _SigBuilder()
        # per-rule binding state
        self.label_vars: set[str] = set()
        self.vector_vars: set[str] = set()
        self.subnet_vars: set[str] = set()
        self.symbol_vars: set[str] = set()

    def parse(self) -> rl.RuleSet:
        out: list[rl.Rule] = []
        self.skip_seps()
        while not self.at("EOF"):
            if self.at("NAME", "sig") and self.at("NAME", k=1):
                self.parse_sig(self.sigs)
            else:
                out.append(self.parse_rule(len(out)))
            self.skip_seps()
        return rl.RuleSet(tuple(out), self.sigs.signature())

    def parse_rule(self, index: int) -> rl.Rule:
        name = f"r{index}"
        priority = 0
        if (
            self.at("NAME", "rule")
            and self.at("NAME", k=1)
            and self.peek(2).kind in ("COLON", "NAME")
        ):
            self.take()
            name = self.expect("NAME", "a rule name").value
            if self.at("NAME", "priority"):
                self.take()
                priority = int(self.expect("INT", "a priority").value)
            self.expect("COLON", "':'")
        self.label_vars = set()
        self.vector_vars = set()
        self.subnet_vars = set()
        self.symbol_vars = set()

        lhs: list[rl.PatternAgent] = []
        while True:
            if self.at("NAME") and self.at("DASH", k=1):
                tok = self.peek()
                raise ParseError("wires are not allowed in patterns", tok.line, tok.col)
            lhs.append(self.parse_pattern_agent(name))
            if self.at("COMMA"):
                self.take()
                continue
            break
        tok = self.peek()
        if tok.kind == "ARROW_INACTIVE":
            kind = rl.INACTIVE
        elif tok.kind == "ARROW":
            kind = rl.ACTIVE
        else:
            raise ParseError(
                f"found {tok.value!r}" if tok.value else "unexpected end of input",
                tok.line,
                tok.col,
                expected=("'=>'", "'=>inactive'"),
            )
        self.take()
        rhs = self.parse_rhs(name)
        return rl.Rule(name, kind, tuple(lhs), tuple(rhs), priority, index)

    # -- patterns

    def parse_pattern_agent(self, rule_name: str) -> rl.PatternAgent:
        symbol: Union[str, rl.SymbolVar]
        if self.at("QMARK"):
            self.take()
            var_tok = self.expect("NAME", "a symbol metavariable")
            # Reuse is deliberate: a diagonal rule names the same variable on
            # both sides of the pair to demand equal symbols.
            self.symbol_vars.add(var_tok.value)
            symbol = rl.SymbolVar(var_tok.value)
            name_tok = var_tok
        else:
            name_tok = self.expect("NAME", "an agent symbol")
            symbol = name_tok.value
        self.expect("CARET", "'^'")
        principal = self.pattern_label()
        self.expect("LP", "'('")
        external = self.parse_pattern_slot()
        internal: rl.Slot = ()
        children: Union[tuple[rl.PatternAgent, ...], rl.SubnetVar] = ()
        if self.at("PIPE"):
            self.take()
            internal = self.parse_pattern_slot()
        if self.at("PIPE"):
            self.take()
            children = self.parse_pattern_children(rule_name)
        self.expect("RP", "')'")
        if isinstance(symbol, str):
            ext_n = len(external) if isinstance(external, tuple) else None
            int_n = len(internal) if isinstance(internal, tuple) else None
            if ext_n is not None and int_n is not None:
                self.sigs.use(symbol, int_n, ext_n, name_tok)
        return rl.PatternAgent(symbol, principal, external, internal, children)

    def pattern_label(self) -> str:
        self.reject_fresh()
        tok = self.expect("NAME", "a label variable")
        if _is_upper(tok.value):
            raise ParseError(
                f"{tok.value} is uppercase; vector and subnet metavariables must "
                f"fill a whole slot",
                tok.line,
                tok.col,
            )
        self.label_vars.add(tok.value)
        return tok.value

    def parse_pattern_slot(self) -> rl.Slot:
        if self.at("EMPTY"):
            self.take()
            return ()
        if self.at("NAME") and _is_upper(self.peek().value) and not self.at("CARET", k=1):
            tok = self.take()
            if self.at("COMMA") and self.at("NAME", k=1) and not self.at("CARET", k=2):
                raise ParseError(
                    f"vector metavariable {tok.value} must be the whole slot",
                    tok.line,
                    tok.col,
                )
            if tok.value in self.vector_vars | self.subnet_vars:
                raise ParseError(
                    f"metavariable {tok.value} already bound", tok.line, tok.col
                )
            self.vector_vars.add(tok.value)
            return rl.VectorVar(tok.value)
        out: list[str] = []
        while self.at("NAME") and not self.at("CARET", k=1):
            out.append(self.pattern_label())
            if self.at("COMMA"):
                self.take()
            else:
                break
        return tuple(out)

    def parse_pattern_children(
        self, rule_name: str
    ) -> Union[tuple[rl.PatternAgent, ...], rl.SubnetVar]:
        if self.at("EMPTY"):
            self.take()
            return ()
        if self.at("NAME") and _is_upper(self.peek().value) and not self.at("CARET", k=1):
            tok = self.take()
            if tok.value in self.vector_vars | self.subnet_vars:
                raise ParseError(
                    f"metavariable {tok.value} already bound", tok.line, tok.col
                )
            self.subnet_vars.add(tok.value)
            return rl.SubnetVar(tok.value)
        out: list[rl.PatternAgent] = []
        while (self.at("NAME") or self.at("QMARK")) and not self.at("RP"):
            out.append(self.parse_pattern_agent(rule_name))
            if self.at("COMMA"):
                self.take()
            else:
                break
        return tuple(out)

    # -- templates

    def parse_rhs(self, rule_name: str) -> list[rl.TemplateItem]:
        items: list[rl.TemplateItem] = []
        fresh_counts: dict[str, int] = {}
        while not self.at("NEWLINE") and not self.at("EOF"):
            if self.at("NAME", "foreach"):
                items.append(self.parse_generator(rule_name))
            elif (
                self.at("NAME")
                and _is_upper(self.peek().value)
                and not self.at("CARET", k=1)
            ):
                tok = self.take()
                if tok.value not in self.subnet_vars:
                    raise ParseError(
                        f"unbound subnet metavariable {tok.value}", tok.line, tok.col
                    )
                items.append(rl.Splice(tok.value))
            elif self.at("NAME") and self.at("DASH", k=1):
                a = self.template_label(None, fresh_counts)
                self.take()
                items.append(rl.TemplateWire(a, self.template_label(None, fresh_counts)))
            else:
                items.append(self.parse_template_agent(rule_name, None, fresh_counts))
            if self.at("COMMA"):
                self.take()
                continue
            break
        for var, n in fresh_counts.items():
            if var not in self.label_vars and n != 2:
                raise ParseError(
                    f"label {var} in rule {rule_name} is not bound on the left and "
                    f"occurs {n} time(s) on the right; fresh intermediaries must "
                    f"occur exactly twice"
                )
        return items

    def parse_generator(self, rule_name: str) -> rl.Generator:
        self.take()  # foreach
        var_tok = self.expect("NAME", "a generator variable")
        if _is_upper(var_tok.value):
            raise ParseError(
                f"generator variable {var_tok.value} must be lowercase",
                var_tok.line,
                var_tok.col,
            )
        if var_tok.value in self.label_vars:
            raise ParseError(
                f"generator variable {var_tok.value} shadows a pattern label",
                var_tok.line,
                var_tok.col,
            )
        if self.at("NAME", "unique"):
            self.take()
            self.expect("DASH", "'-'")
            if not self.at("NAME", "in"):
                tok = self.peek()
                raise ParseError(
                    f"found {tok.value!r}", tok.line, tok.col, expected=("'in'",)
                )
        elif not self.at("NAME", "in"):
            tok = self.peek()
            raise ParseError(
                f"found {tok.value!r}", tok.line, tok.col, expected=("'in'", "'unique-in'")
            )
        self.take()  # in
        kind: str
        if self.at("NAME") and self.peek().value in ("I", "L") and self.at("LP", k=1):
            kind = "interface" if self.peek().value == "I" else "unique"
            self.take()
            self.take()  # '('
            src_tok = self.expect("NAME", "a subnet metavariable")
            if src_tok.value not in self.subnet_vars:
                raise ParseError(
                    f"unbound subnet metavariable {src_tok.value}",
                    src_tok.line,
                    src_tok.col,
                )
            self.expect("RP", "')'")
        else:
            src_tok = self.expect("NAME", "a bound vector metavariable")
            kind = "vector"
            if src_tok.value not in self.vector_vars:
                raise ParseError(
                    f"unbound vector metavariable {src_tok.value}",
                    src_tok.line,
                    src_tok.col,
                )
        self.expect("COLON", "':'")
        gen = rl.Generator(var_tok.value, kind, src_tok.value)
        body: list[Union[rl.TemplateAgent, rl.TemplateWire]] = []
        body_fresh: dict[str, int] = {}
        while True:
            if self.at("NAME") and self.at("DASH", k=1):
                a = self.template_label(gen, body_fresh)
                self.take()
                body.append(rl.TemplateWire(a, self.template_label(gen, body_fresh)))
            else:
                body.append(self.parse_template_agent(None, gen, body_fresh))
            if self.at("COMMA") and not self.at("NAME", "foreach", k=1):
                self.take()
                continue
            break
        for v, n in body_fresh.items():
            if (
                v not in self.label_vars
                and v != gen.var
                and v != "~" + gen.var
                and n != 2
            ):
                raise ParseError(
                    f"label {v} inside a foreach body occurs {n} time(s) per "
                    f"iteration; fresh labels must occur exactly twice"
                )
        return rl.Generator(gen.var, gen.kind, gen.source, tuple(body))

    def parse_template_agent(
        self,
        rule_name: Optional[str],
        gen: Optional[rl.Generator],
        fresh_counts: dict[str, int],
    ) -> rl.TemplateAgent:
        symbol: Union[str, rl.SymbolVar, rl.DerivedSymbol]
        if self.at("QMARK"):
            self.take()
            tok = self.expect("NAME", "a symbol metavariable")
            if tok.value in self.symbol_vars:
                symbol = rl.SymbolVar(tok.value)
            else:
                base = max(
                    (b for b in self.symbol_vars if tok.value.startswith(b + "_")),
                    key=len,
                    default=None,
                )
                if base is None:
                    raise ParseError(
                        f"unbound symbol metavariable ?{tok.value}", tok.line, tok.col
                    )
                symbol = rl.DerivedSymbol(base, tok.value[len(base):])
            name_tok = tok
        else:
            name_tok = self.expect("NAME", "an agent symbol")
            symbol = name_tok.value
        self.expect("CARET", "'^'")
        principal = self.template_label(gen, fresh_counts)
        self.expect("LP", "'('")
        external = self.parse_template_slot(gen, fresh_counts)
        internal: rl.Slot = ()
        children: Union[tuple[rl.TemplateAgent, ...], rl.SubnetVar] = ()
        if self.at("PIPE"):
            self.take()
            internal = self.parse_template_slot(gen, fresh_counts)
        if self.at("PIPE"):
            self.take()
            children = self.parse_template_children(gen, fresh_counts)
        self.expect("RP", "')'")
        if isinstance(symbol, str):
            ext_n = len(external) if isinstance(external, tuple) else None
            int_n = len(internal) if isinstance(internal, tuple) else None
            if ext_n is not None and int_n is not None:
                self.sigs.use(symbol, int_n, ext_n, name_tok)
        return rl.TemplateAgent(symbol, principal, external, internal, children)

    def template_label(
        self, gen: Optional[rl.Generator], fresh_counts: dict[str, int]
    ) -> str:
        self.reject_fresh()
        if self.at("TILDE"):
            tilde = self.take()
            tok = self.expect("NAME", "a generator variable")
            if gen is None or tok.value != gen.var or gen.kind != "interface":
                raise ParseError(
                    f"~{tok.value} is only meaningful inside a foreach body over "
                    f"I(subnet)",
                    tilde.line,
                    tilde.col,
                )
            return "~" + tok.value
        tok = self.expect("NAME", "a label")
        if _is_upper(tok.value):
            raise ParseError(
                f"{tok.value} is uppercase; vector metavariables must fill a whole slot",
                tok.line,
                tok.col,
            )
        if gen is not None and tok.value in self.label_vars:
            # flagged by check_ruleset; still track for error messages
            fresh_counts[tok.value] = fresh_counts.get(tok.value, 0) + 1
            return tok.value
        fresh_counts[tok.value] = fresh_counts.get(tok.value, 0) + 1
        return tok.value

    def parse_template_slot(
        self, gen: Optional[rl.Generator], fresh_counts: dict[str, int]
    ) -> rl.Slot:
        if self.at("EMPTY"):
            self.take()
            return ()
        if self.at("NAME") and _is_upper(self.peek().value) and not self.at("CARET", k=1):
            tok = self.take()
            if tok.value not in self.vector_vars:
                raise ParseError(
                    f"unbound vector metavariable {tok.value}", tok.line, tok.col
                )
            return rl.VectorVar(tok.value)
        out: list[str] = []
        while (self.at("NAME") and not self.at("CARET", k=1)) or self.at("TILDE"):
            out.append(self.template_label(gen, fresh_counts))
            if self.at("COMMA"):
                self.take()
            else:
                break
        return tuple(out)

    def parse_template_children(
        self, gen: Optional[rl.Generator], fresh_counts: dict[str, int]
    ) -> Union[tuple[rl.TemplateAgent, ...], rl.SubnetVar]:
        if self.at("EMPTY"):
            self.take()
            return ()
        if self.at("NAME") and _is_upper(self.peek().value) and not self.at("CARET", k=1):
            tok = self.take()
            if tok.value not in self.subnet_vars:
                raise ParseError(
                    f"unbound subnet metavariable {tok.value}", tok.line, tok.col
                )
            return rl.SubnetVar(tok.value)
        out: list[rl.TemplateAgent] = []
        while (self.at("NAME") or self.at("QMARK")) and not self.at("RP"):
            out.append(self.parse_template_agent(None, gen, fresh_counts))
            if self.at("COMMA"):
                self.take()
            else:
                break
        return tuple(out)


def parse_rules(text: str) -> rl.RuleSet:
    return _RulesParser(text).parse()


# ---------------------------------------------------------------------------
# Printing


def _fresh_renaming(binet: Binet) -> dict[str, str]:
    """Map engine-minted %N labels to parseable w0, w1, ... names."""
    order: list[str] = []
    seen: set[str] = set()

    def note(label: str) -> None:
        if core.is_fresh_label(label) and label not in seen:
            seen.add(label)
            order.append(label)

    for _path, agent, _parent in core.iter_agents(binet):
        for lab in agent.ports():
            note(lab)
    for wire in binet.wires:
        note(wire.a)
        note(wire.b)
    if not order:
        return {}
    taken = {
        lab
        for lab, _refs in core.occurrences(binet).items()
        if not core.is_fresh_label(lab)
    }
    mapping: dict[str, str] = {}
    k = 0
    for lab in order:
        while f"w{k}" in taken:
            k += 1
        mapping[lab] = f"w{k}"
        k += 1
    return mapping


def format_agent(agent: Agent) -> str:
    ext = ", ".join(agent.external)
    if agent.children:
        kids = ", ".join(format_agent(c) for c in agent.children)
        return f"{agent.symbol.name}^{agent.principal}({ext} | {', '.join(agent.internal)} | {kids})"
    if agent.internal:
        return f"{agent.symbol.name}^{agent.principal}({ext} | {', '.join(agent.internal)})"
    return f"{agent.symbol.name}^{agent.principal}({ext})"


def print_binet(binet: Binet) -> str:
    """Canonical text: stable under sibling reordering, always re-parseable."""
    renaming = _fresh_renaming(binet)
    if renaming:
        binet = core.rename_binet(binet, renaming)
    binet = core.sorted_binet(binet)
    used = sorted({agent.symbol for agent in binet.walk()}, key=lambda s: s.name)
    lines = [f"sig {s.name}({s.internal_arity}, {s.external_arity})" for s in used]
    if lines:
        lines.append("")
    lines.extend(format_agent(a) for a in binet.agents)
    lines.extend(f"{w.a}-{w.b}" for w in binet.wires)
    return "\n".join(lines) + ("\n" if lines else "")
