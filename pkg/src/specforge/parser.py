"""Surface syntax for `.ebs` model files: tokenizer, parser, pretty-printer.

Grammar sketch (sections appear in this order, all optional):

    context NAME [extends NAME]
      sets        S = { a, b, ... } ...
      constants   c = <literal expr> ...
      axioms      label: <expr> ...
    end

    machine NAME [refines NAME] [sees C1, C2]
      variables   name : <type> ...
      invariants  label: <expr> ...
      gluing      label: <expr> ...           (abstract vars as abs_<name>)
      variant     <expr>
      init        label: var := <expr> ...
      events
        event NAME [refines NAME] [ordinary|convergent]
          [any p : <type>, ...] [where label: <expr> ...] [then label: var := <expr> ...]
        end ...
      priority    e1, e2, ...
    end

Types: `bool` | `bounds LO HI` | CARRIER | `{ <type> [|-> <type>] }`.
Operators, loosest first: => (right-assoc), or, &, comparisons/in, + -, *,
unary not. Maplets `a |-> b` appear inside set braces or parentheses.
Comments run from `//` to end of line. Files are UTF-8, LF or CRLF.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .kernel import (
    Assign,
    BoolType,
    ContextDef,
    EventDef,
    Expr,
    IntType,
    IntV,
    BoolV,
    Labeled,
    MachineDef,
    MapletType,
    MapletV,
    SetType,
    SetV,
    SymType,
    SymV,
    TypeDesc,
    Value,
    e_bin,
    e_bool,
    e_int,
    e_maplet,
    e_not,
    e_set,
    e_var,
    format_value,
)

# ---------------------------------------------------------------------------
# Diagnostics


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self):
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError("span start after end")

    def __str__(self):
        return f"{self.file}:{self.start_line}:{self.start_col}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    message: str
    span: SourceSpan

    def __post_init__(self):
        if not self.message:
            raise ValueError("empty diagnostic message")
        if self.severity not in ("error", "warning"):
            raise ValueError(f"bad severity {self.severity!r}")

    def __str__(self):
        return f"{self.span}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


# ---------------------------------------------------------------------------
# Tokenizer

KEYWORDS = {
    "context", "extends", "sets", "constants", "axioms",
    "machine", "refines", "sees", "variables", "invariants", "gluing",
    "variant", "init", "events", "event", "any", "where", "then", "end",
    "ordinary", "convergent", "priority", "bounds", "bool",
    "in", "or", "not", "true", "false",
}

_PUNCT = [
    "|->", ":=", "=>", "/=", "<=", ">=",
    "&", "=", "<", ">", "+", "-", "*", ":", ",", "{", "}", "(", ")",
]


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | KEYWORD | INT | punct text | EOF
    text: str
    line: int
    col: int


_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_INT = re.compile(r"[0-9]+")


def tokenize(text: str, file_name: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group()
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            toks.append(Token(kind, word, line, col))
            i = m.end()
            col += len(word)
            continue
        m = _INT.match(text, i)
        if m:
            toks.append(Token("INT", m.group(), line, col))
            col += len(m.group())
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            span = SourceSpan(file_name, line, col, line, col + 1)
            raise ParseError(
                Diagnostic("error", f"unexpected character {ch!r}", span)
            )
    toks.append(Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


@dataclass
class ParseResult:
    defs: tuple[Union[ContextDef, MachineDef], ...] = ()
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    @property
    def contexts(self) -> tuple[ContextDef, ...]:
        return tuple(d for d in self.defs if isinstance(d, ContextDef))

    @property
    def machines(self) -> tuple[MachineDef, ...]:
        return tuple(d for d in self.defs if isinstance(d, MachineDef))


class _Parser:
    def __init__(self, toks: list[Token], file_name: str):
        self.toks = toks
        self.pos = 0
        self.file = file_name
        # symbols/constants declared by contexts earlier in this file, used to
        # evaluate constant initializers
        self.known_contexts: dict[str, ContextDef] = {}

    # -- token plumbing

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def span(self, tok: Token, length: Optional[int] = None) -> SourceSpan:
        ln = length if length is not None else max(1, len(tok.text))
        return SourceSpan(self.file, tok.line, tok.col, tok.line, tok.col + ln)

    def fail(self, tok: Token, msg: str):
        raise ParseError(Diagnostic("error", msg, self.span(tok)))

    def expect(self, kind: str, what: str = "") -> Token:
        t = self.peek()
        if t.kind != kind:
            shown = what or f"'{kind}'"
            got = t.text if t.kind != "EOF" else "end of file"
            self.fail(t, f"expected {shown}, found '{got}'" if t.kind != "EOF"
                      else f"expected {shown}, found end of file")
        return self.next()

    def expect_kw(self, word: str) -> Token:
        t = self.peek()
        if t.kind != "KEYWORD" or t.text != word:
            self.fail(t, f"expected '{word}', found '{t.text or 'end of file'}'")
        return self.next()

    def at_kw(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "KEYWORD" and t.text == word

    def take_kw(self, word: str) -> bool:
        if self.at_kw(word):
            self.next()
            return True
        return False

    def ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "IDENT":
            if t.kind == "KEYWORD":
                self.fail(t, f"keyword '{t.text}' cannot be used as {what}")
            self.fail(t, f"expected {what}, found '{t.text or 'end of file'}'")
        return self.next()

    # -- top level

    def module(self) -> tuple[Union[ContextDef, MachineDef], ...]:
        defs: list[Union[ContextDef, MachineDef]] = []
        while not self.peek().kind == "EOF":
            if self.at_kw("context"):
                ctx = self.context()
                if ctx.name in self.known_contexts:
                    self.fail(self.peek(), f"duplicate context '{ctx.name}'")
                self.known_contexts[ctx.name] = ctx
                defs.append(ctx)
            elif self.at_kw("machine"):
                defs.append(self.machine())
            else:
                t = self.peek()
                self.fail(t, "expected 'context' or 'machine'")
        return tuple(defs)

    # -- contexts

    def context(self) -> ContextDef:
        kw = self.expect_kw("context")
        name = self.ident("context name").text
        extends = None
        if self.take_kw("extends"):
            extends = self.ident("context name").text
        sets: dict[str, tuple[str, ...]] = {}
        if self.take_kw("sets"):
            while self.peek().kind == "IDENT":
                carrier = self.ident("carrier set name").text
                if carrier in sets:
                    self.fail(self.peek(), f"duplicate carrier set '{carrier}'")
                self.expect("=")
                self.expect("{")
                members = [self.ident("symbol").text]
                while self.peek().kind == ",":
                    self.next()
                    members.append(self.ident("symbol").text)
                self.expect("}")
                sets[carrier] = tuple(members)
        constants: dict[str, Value] = {}
        if self.take_kw("constants"):
            while self.peek().kind == "IDENT":
                cname_tok = self.ident("constant name")
                cname = cname_tok.text
                if cname in constants:
                    self.fail(cname_tok, f"duplicate constant '{cname}'")
                self.expect("=")
                expr = self.expression()
                constants[cname] = self._const_eval(expr, sets, constants, extends,
                                                    cname_tok)
        axioms = tuple(self.labeled_list()) if self.take_kw("axioms") else ()
        self.expect_kw("end")
        try:
            return ContextDef(name, sets, constants, axioms, extends,
                              span=self.span(kw))
        except ValueError as exc:
            raise ParseError(Diagnostic("error", str(exc), self.span(kw))) from exc

    def _const_eval(self, e: Expr, sets, constants, extends, where: Token) -> Value:
        """Constant initializers are literal expressions over symbols, earlier
        constants and integer arithmetic, evaluated at parse time."""
        def symbols() -> dict[str, str]:
            table = {m: c for c, ms in sets.items() for m in ms}
            chain = extends
            while chain is not None and chain in self.known_contexts:
                parent = self.known_contexts[chain]
                table.update(parent.symbol_carrier())
                chain = parent.extends
            return table

        sym_table = symbols()

        def ev(x: Expr) -> Value:
            if x.kind == "IntLit":
                return IntV(x.payload)
            if x.kind == "BoolLit":
                return BoolV(x.payload)
            if x.kind == "VarRef":
                name = x.payload
                if name in constants:
                    return constants[name]
                chain = extends
                while chain is not None and chain in self.known_contexts:
                    parent = self.known_contexts[chain]
                    if name in parent.constants:
                        return parent.constants[name]
                    chain = parent.extends
                if name in sym_table:
                    return SymV(name, sym_table[name])
                self.fail(where, f"constant initializer references unknown name "
                                 f"'{name}'")
            if x.kind == "SetLit":
                return SetV(ev(c) for c in x.children)
            if x.kind == "Maplet":
                return MapletV(ev(x.children[0]), ev(x.children[1]))
            if x.kind in ("Add", "Sub", "Mul"):
                a, b = ev(x.children[0]), ev(x.children[1])
                if not (isinstance(a, IntV) and isinstance(b, IntV)):
                    self.fail(where, "constant arithmetic requires integers")
                op = {"Add": int.__add__, "Sub": int.__sub__,
                      "Mul": int.__mul__}[x.kind]
                return IntV(op(a.value, b.value))
            self.fail(where, f"constant initializer must be a literal "
                             f"expression (found {x.kind})")

        return ev(e)

    # -- machines

    def machine(self) -> MachineDef:
        kw = self.expect_kw("machine")
        name = self.ident("machine name").text
        refines = self.ident("machine name").text if self.take_kw("refines") else None
        sees: list[str] = []
        if self.take_kw("sees"):
            sees.append(self.ident("context name").text)
            while self.peek().kind == ",":
                self.next()
                sees.append(self.ident("context name").text)
        variables: dict[str, TypeDesc] = {}
        if self.take_kw("variables"):
            while self.peek().kind == "IDENT":
                vtok = self.ident("variable name")
                if vtok.text in variables:
                    self.fail(vtok, f"duplicate variable '{vtok.text}'")
                self.expect(":")
                variables[vtok.text] = self.type_desc()
        invariants = tuple(self.labeled_list()) if self.take_kw("invariants") else ()
        gluing = tuple(self.labeled_list()) if self.take_kw("gluing") else ()
        variant = self.expression() if self.take_kw("variant") else None
        init = tuple(self.action_list()) if self.take_kw("init") else ()
        events: list[EventDef] = []
        if self.take_kw("events"):
            while self.at_kw("event"):
                events.append(self.event())
        priority: list[str] = []
        if self.take_kw("priority"):
            priority.append(self.ident("event name").text)
            while self.peek().kind == ",":
                self.next()
                priority.append(self.ident("event name").text)
        self.expect_kw("end")
        try:
            return MachineDef(
                name=name, sees=tuple(sees), refines=refines, variables=variables,
                invariants=invariants, gluing=gluing, variant=variant, init=init,
                events=tuple(events), priority=tuple(priority), span=self.span(kw),
            )
        except ValueError as exc:
            raise ParseError(Diagnostic("error", str(exc), self.span(kw))) from exc

    def event(self) -> EventDef:
        kw = self.expect_kw("event")
        name = self.ident("event name").text
        refines = self.ident("event name").text if self.take_kw("refines") else None
        status = "ordinary"
        if self.take_kw("convergent"):
            status = "convergent"
        elif self.take_kw("ordinary"):
            status = "ordinary"
        params: dict[str, TypeDesc] = {}
        if self.take_kw("any"):
            while True:
                ptok = self.ident("parameter name")
                if ptok.text in params:
                    self.fail(ptok, f"duplicate parameter '{ptok.text}'")
                self.expect(":")
                params[ptok.text] = self.type_desc()
                if self.peek().kind == ",":
                    self.next()
                    continue
                break
        guards = tuple(self.labeled_list()) if self.take_kw("where") else ()
        actions = tuple(self.action_list()) if self.take_kw("then") else ()
        self.expect_kw("end")
        try:
            return EventDef(name, status, refines, params, guards, actions,
                            span=self.span(kw))
        except ValueError as exc:
            raise ParseError(Diagnostic("error", str(exc), self.span(kw))) from exc

    def type_desc(self) -> TypeDesc:
        t = self.peek()
        if self.take_kw("bool"):
            return BoolType()
        if self.take_kw("bounds"):
            lo = self.bound_int()
            hi = self.bound_int()
            if lo > hi:
                self.fail(t, f"empty integer range {lo}..{hi}")
            return IntType(lo, hi)
        if t.kind == "IDENT":
            return SymType(self.next().text)
        if t.kind == "{":
            self.next()
            elem = self.type_desc()
            if self.peek().kind == "|->":
                self.next()
                elem = MapletType(elem, self.type_desc())
            self.expect("}")
            return SetType(elem)
        self.fail(t, "expected a type (bool, bounds LO HI, a carrier set, "
                     "or { ... })")

    def bound_int(self) -> int:
        neg = False
        if self.peek().kind == "-":
            self.next()
            neg = True
        tok = self.expect("INT", "integer bound")
        v = int(tok.text)
        return -v if neg else v

    def labeled_list(self) -> list[Labeled]:
        out: list[Labeled] = []
        seen: set[str] = set()
        while self.peek().kind == "IDENT":
            label_tok = self.ident("label")
            if label_tok.text in seen:
                self.fail(label_tok, f"duplicate label '{label_tok.text}'")
            seen.add(label_tok.text)
            self.expect(":")
            out.append(Labeled(label_tok.text, self.expression()))
        return out

    def action_list(self) -> list[Assign]:
        out: list[Assign] = []
        seen: set[str] = set()
        while self.peek().kind == "IDENT":
            label_tok = self.ident("label")
            if label_tok.text in seen:
                self.fail(label_tok, f"duplicate label '{label_tok.text}'")
            seen.add(label_tok.text)
            self.expect(":")
            var = self.ident("variable name").text
            self.expect(":=")
            out.append(Assign(label_tok.text, var, self.expression()))
        return out

    # -- expressions (precedence climbing; loosest first: => or & cmp +- * not)

    def expression(self) -> Expr:
        return self.implies()

    def implies(self) -> Expr:
        left = self.or_expr()
        if self.peek().kind == "=>":
            self.next()
            # right-associative
            return e_bin("Implies", left, self.implies())
        return left

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at_kw("or"):
            self.next()
            e = e_bin("Or", e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.comparison()
        while self.peek().kind == "&":
            self.next()
            e = e_bin("And", e, self.comparison())
        return e

    _CMP = {"=": "Eq", "/=": "Neq", "<": "Lt", "<=": "Le", ">": "Gt", ">=": "Ge"}

    def comparison(self) -> Expr:
        e = self.additive()
        t = self.peek()
        if t.kind in self._CMP:
            self.next()
            return e_bin(self._CMP[t.kind], e, self.additive())
        if self.at_kw("in"):
            self.next()
            return e_bin("In", e, self.additive())
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            e = e_bin("Add" if op == "+" else "Sub", e, self.multiplicative())
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.peek().kind == "*":
            self.next()
            e = e_bin("Mul", e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.at_kw("not"):
            self.next()
            return e_not(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "INT":
            self.next()
            e = e_int(int(t.text))
            object.__setattr__(e, "span", self.span(t))
            return e
        if self.at_kw("true"):
            self.next()
            return e_bool(True)
        if self.at_kw("false"):
            self.next()
            return e_bool(False)
        if t.kind == "IDENT":
            self.next()
            e = e_var(t.text)
            object.__setattr__(e, "span", self.span(t))
            return e
        if t.kind == "(":
            self.next()
            e = self.expression()
            if self.peek().kind == "|->":  # parenthesized maplet
                self.next()
                e = e_maplet(e, self.expression())
            self.expect(")")
            return e
        if t.kind == "{":
            self.next()
            elems: list[Expr] = []
            if self.peek().kind != "}":
                elems.append(self.set_element())
                while self.peek().kind == ",":
                    self.next()
                    elems.append(self.set_element())
            self.expect("}")
            return e_set(*elems)
        got = t.text if t.kind != "EOF" else "end of file"
        self.fail(t, f"expected an expression, found '{got}'")

    def set_element(self) -> Expr:
        e = self.expression()
        if self.peek().kind == "|->":
            self.next()
            return e_maplet(e, self.expression())
        return e


def parse_module(text: str, file_name: str = "<input>") -> ParseResult:
    """Parse one `.ebs` source into definitions. On any fault, returns
    diagnostics and no partial results; never raises for bad input."""
    try:
        toks = tokenize(text, file_name)
        parser = _Parser(toks, file_name)
        defs = parser.module()
        return ParseResult(defs=defs)
    except ParseError as exc:
        return ParseResult(diagnostics=[exc.diagnostic])
    except RecursionError:
        span = SourceSpan(file_name, 1, 1, 1, 2)
        return ParseResult(diagnostics=[
            Diagnostic("error", "expression nesting too deep", span)
        ])


def parse_source_bytes(data: bytes, file_name: str = "<input>") -> ParseResult:
    """Byte-level entry point; invalid UTF-8 yields a diagnostic."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        span = SourceSpan(file_name, 1, 1, 1, 2)
        return ParseResult(diagnostics=[
            Diagnostic("error", f"invalid UTF-8: {exc.reason}", span)
        ])
    return parse_module(text, file_name)


def parse_expression(text: str, file_name: str = "<expr>") -> Expr:
    """Parse a bare expression (used by scenario files and tests). Raises
    ParseError on bad input."""
    toks = tokenize(text, file_name)
    parser = _Parser(toks, file_name)
    e = parser.set_element()  # allows a top-level maplet
    tail = parser.peek()
    if tail.kind != "EOF":
        parser.fail(tail, f"unexpected trailing input '{tail.text}'")
    return e


# ---------------------------------------------------------------------------
# Pretty-printer

_LEVEL = {
    "Implies": 1, "Or": 2, "And": 3,
    "Eq": 4, "Neq": 4, "Lt": 4, "Le": 4, "Gt": 4, "Ge": 4, "In": 4,
    "Add": 5, "Sub": 5, "Mul": 6, "Not": 7,
}

_OPTEXT = {
    "Implies": "=>", "Or": "or", "And": "&", "Eq": "=", "Neq": "/=",
    "Lt": "<", "Le": "<=", "Gt": ">", "Ge": ">=", "In": "in",
    "Add": "+", "Sub": "-", "Mul": "*",
}


def format_expr(e: Expr, _ctx_level: int = 0) -> str:
    k = e.kind
    if k == "IntLit":
        return str(e.payload)
    if k == "BoolLit":
        return "true" if e.payload else "false"
    if k in ("SymbolRef", "VarRef"):
        return e.payload
    if k == "SetLit":
        return "{" + ", ".join(_format_set_elem(c) for c in e.children) + "}"
    if k == "Maplet":
        return f"({_format_set_elem(e)})"
    if k == "Not":
        inner = format_expr(e.children[0], _LEVEL["Not"])
        return f"not {inner}"
    lvl = _LEVEL[k]
    if k == "Implies":  # right-associative
        lhs = format_expr(e.children[0], lvl + 1)
        rhs = format_expr(e.children[1], lvl)
    elif lvl == 4:  # comparisons are non-associative
        lhs = format_expr(e.children[0], lvl + 1)
        rhs = format_expr(e.children[1], lvl + 1)
    else:
        lhs = format_expr(e.children[0], lvl)
        rhs = format_expr(e.children[1], lvl + 1)
    out = f"{lhs} {_OPTEXT[k]} {rhs}"
    return f"({out})" if lvl < _ctx_level else out


def _format_set_elem(e: Expr) -> str:
    if e.kind == "Maplet":
        return f"{format_expr(e.children[0], 5)} |-> {format_expr(e.children[1], 5)}"
    return format_expr(e)


def _format_type(t: TypeDesc) -> str:
    if isinstance(t, BoolType):
        return "bool"
    if isinstance(t, IntType):
        return f"bounds {t.lo} {t.hi}"
    if isinstance(t, SymType):
        return t.carrier
    if isinstance(t, SetType):
        inner = t.elem
        if isinstance(inner, MapletType):
            return f"{{ {_format_type(inner.left)} |-> {_format_type(inner.right)} }}"
        return f"{{ {_format_type(inner)} }}"
    return f"{_format_type(t.left)} |-> {_format_type(t.right)}"


def _value_to_literal(v: Value) -> str:
    # symbols print bare; SetV/MapletV reuse the canonical value layout, which
    # is valid expression syntax
    return format_value(v)


def _print_context(c: ContextDef, out: list[str]):
    head = f"context {c.name}"
    if c.extends:
        head += f" extends {c.extends}"
    out.append(head)
    if c.sets:
        out.append("  sets")
        for name, members in c.sets.items():
            out.append(f"    {name} = {{ " + ", ".join(members) + " }")
    if c.constants:
        out.append("  constants")
        for name, v in c.constants.items():
            out.append(f"    {name} = {_value_to_literal(v)}")
    if c.axioms:
        out.append("  axioms")
        for lab in c.axioms:
            out.append(f"    {lab.label}: {format_expr(lab.expr)}")
    out.append("end")


def _print_event(ev: EventDef, out: list[str]):
    head = f"    event {ev.name}"
    if ev.refines:
        head += f" refines {ev.refines}"
    if ev.status == "convergent":
        head += " convergent"
    out.append(head)
    if ev.params:
        decls = ", ".join(f"{n} : {_format_type(t)}" for n, t in ev.params.items())
        out.append(f"      any {decls}")
    if ev.guards:
        out.append("      where")
        for lab in ev.guards:
            out.append(f"        {lab.label}: {format_expr(lab.expr)}")
    if ev.actions:
        out.append("      then")
        for a in ev.actions:
            out.append(f"        {a.label}: {a.var} := {format_expr(a.expr)}")
    out.append("    end")


def _print_machine(m: MachineDef, out: list[str]):
    out.append(f"machine {m.name}")
    if m.refines:
        out.append(f"  refines {m.refines}")
    if m.sees:
        out.append("  sees " + ", ".join(m.sees))
    if m.variables:
        out.append("  variables")
        for name, t in m.variables.items():
            out.append(f"    {name} : {_format_type(t)}")
    if m.invariants:
        out.append("  invariants")
        for lab in m.invariants:
            out.append(f"    {lab.label}: {format_expr(lab.expr)}")
    if m.gluing:
        out.append("  gluing")
        for lab in m.gluing:
            out.append(f"    {lab.label}: {format_expr(lab.expr)}")
    if m.variant is not None:
        out.append(f"  variant {format_expr(m.variant)}")
    if m.init:
        out.append("  init")
        for a in m.init:
            out.append(f"    {a.label}: {a.var} := {format_expr(a.expr)}")
    if m.events:
        out.append("  events")
        for ev in m.events:
            _print_event(ev, out)
    if m.priority:
        out.append("  priority " + ", ".join(m.priority))
    out.append("end")


def pretty_print(defs: Sequence[Union[ContextDef, MachineDef]]) -> str:
    """Deterministic canonical text; output re-parses to structurally equal
    definitions. Emits LF line endings."""
    out: list[str] = []
    for i, d in enumerate(defs):
        if i:
            out.append("")
        if isinstance(d, ContextDef):
            _print_context(d, out)
        else:
            _print_machine(d, out)
    return "\n".join(out) + "\n"
