"""Expression evaluation, static type checking, and event semantics.

Evaluation is a plain tree walk over immutable kernel structures; the checker
has its own compiled fast path and cross-checks against this one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    EvalTypeError,
    EventNotEnabledError,
    UnboundNameError,
)
from .kernel import (
    ABSTRACT_PREFIX,
    BoolType,
    BoolV,
    ContextDef,
    EventDef,
    Expr,
    IntType,
    IntV,
    Labeled,
    MachineDef,
    MapletType,
    MapletV,
    SetType,
    SetV,
    State,
    SymType,
    SymV,
    TypeDesc,
    Value,
    format_type,
    format_value,
    state_update,
    value_equal,
)
from .parser import Diagnostic, SourceSpan

Binding = Mapping[str, Value]


@dataclass(frozen=True)
class EnabledEvent:
    """An event name plus a parameter binding under which all guards hold."""

    event: str
    binding: Mapping[str, Value]

    def describe(self) -> str:
        if not self.binding:
            return self.event
        args = " ".join(f"{k}={format_value(v)}" for k, v in self.binding.items())
        return f"{self.event} {args}"


# ---------------------------------------------------------------------------
# Context merging (a machine may see several contexts, and contexts extend)


def merge_contexts(contexts: Sequence[ContextDef], name: str = "<merged>") -> ContextDef:
    sets: dict[str, tuple[str, ...]] = {}
    constants: dict[str, Value] = {}
    axioms: list[Labeled] = []
    for c in contexts:
        for carrier, members in c.sets.items():
            if carrier in sets and sets[carrier] != members:
                raise ValueError(f"carrier set '{carrier}' declared twice")
            sets[carrier] = members
        for cname, v in c.constants.items():
            if cname in constants and constants[cname] != v:
                raise ValueError(f"constant '{cname}' declared twice")
            constants[cname] = v
        axioms.extend(a for a in c.axioms if a not in axioms)
    return ContextDef(name, sets, constants, tuple(axioms), None)


def context_closure(
    name: str, by_name: Mapping[str, ContextDef]
) -> list[ContextDef]:
    """A context plus its extends-ancestors, parents first. Raises KeyError on
    an unresolved name."""
    chain: list[ContextDef] = []
    seen: set[str] = set()
    def visit(n: str):
        if n in seen:
            return
        seen.add(n)
        c = by_name[n]
        if c.extends:
            visit(c.extends)
        chain.append(c)
    visit(name)
    return chain


def machine_context(m: MachineDef, by_name: Mapping[str, ContextDef]) -> ContextDef:
    todo: list[ContextDef] = []
    for n in m.sees:
        todo.extend(context_closure(n, by_name))
    return merge_contexts(todo, name=f"<seen by {m.name}>")


_EMPTY_CTX = ContextDef("<empty>", {}, {})


# ---------------------------------------------------------------------------
# Evaluation


def eval_expr(
    e: Expr,
    s: Optional[State] = None,
    env: Optional[Binding] = None,
    ctx: Optional[ContextDef] = None,
) -> Value:
    """Total on well-typed input. And/Or/Implies short-circuit left to right;
    In tests membership via value_equal."""
    ctx = ctx or _EMPTY_CTX
    symbols = ctx.symbol_carrier()

    def ev(x: Expr) -> Value:
        k = x.kind
        if k == "IntLit":
            return IntV(x.payload)
        if k == "BoolLit":
            return BoolV(x.payload)
        if k == "SymbolRef":
            carrier = symbols.get(x.payload)
            if carrier is None:
                raise UnboundNameError(x.payload)
            return SymV(x.payload, carrier)
        if k == "VarRef":
            name = x.payload
            if env is not None and name in env:
                return env[name]
            if s is not None and name in s:
                return s[name]
            if name in ctx.constants:
                return ctx.constants[name]
            if name in ctx.sets:
                return SetV(SymV(m, name) for m in ctx.sets[name])
            if name in symbols:
                return SymV(name, symbols[name])
            raise UnboundNameError(name)
        if k == "Not":
            return BoolV(not _as_bool(ev(x.children[0])))
        if k == "And":
            if not _as_bool(ev(x.children[0])):
                return BoolV(False)
            return BoolV(_as_bool(ev(x.children[1])))
        if k == "Or":
            if _as_bool(ev(x.children[0])):
                return BoolV(True)
            return BoolV(_as_bool(ev(x.children[1])))
        if k == "Implies":
            if not _as_bool(ev(x.children[0])):
                return BoolV(True)
            return BoolV(_as_bool(ev(x.children[1])))
        if k == "Eq":
            return BoolV(value_equal(ev(x.children[0]), ev(x.children[1])))
        if k == "Neq":
            return BoolV(not value_equal(ev(x.children[0]), ev(x.children[1])))
        if k in ("Lt", "Le", "Gt", "Ge"):
            a, b = _as_int(ev(x.children[0])), _as_int(ev(x.children[1]))
            return BoolV(
                a < b if k == "Lt" else a <= b if k == "Le"
                else a > b if k == "Gt" else a >= b
            )
        if k in ("Add", "Sub", "Mul"):
            a, b = _as_int(ev(x.children[0])), _as_int(ev(x.children[1]))
            return IntV(a + b if k == "Add" else a - b if k == "Sub" else a * b)
        if k == "In":
            elem = ev(x.children[0])
            container = ev(x.children[1])
            if not isinstance(container, SetV):
                raise EvalTypeError("right operand of 'in' is not a set")
            return BoolV(any(value_equal(elem, member) for member in container.elems))
        if k == "SetLit":
            return SetV(ev(c) for c in x.children)
        if k == "Maplet":
            return MapletV(ev(x.children[0]), ev(x.children[1]))
        raise EvalTypeError(f"cannot evaluate {k}")  # pragma: no cover

    return ev(e)


def _as_bool(v: Value) -> bool:
    if not isinstance(v, BoolV):
        raise EvalTypeError(f"expected boolean, got {format_value(v)}")
    return v.value


def _as_int(v: Value) -> int:
    if not isinstance(v, IntV):
        raise EvalTypeError(f"expected integer, got {format_value(v)}")
    return v.value


# ---------------------------------------------------------------------------
# Finite domain enumeration (canonical order: ints ascending, false before
# true, symbols in carrier declaration order, subsets by size then position)


def enumerate_type(t: TypeDesc, ctx: ContextDef) -> tuple[Value, ...]:
    if isinstance(t, IntType):
        return tuple(IntV(i) for i in range(t.lo, t.hi + 1))
    if isinstance(t, BoolType):
        return (BoolV(False), BoolV(True))
    if isinstance(t, SymType):
        members = ctx.sets.get(t.carrier)
        if members is None:
            raise UnboundNameError(t.carrier)
        return tuple(SymV(m, t.carrier) for m in members)
    if isinstance(t, MapletType):
        lefts = enumerate_type(t.left, ctx)
        rights = enumerate_type(t.right, ctx)
        return tuple(MapletV(a, b) for a in lefts for b in rights)
    if isinstance(t, SetType):
        elems = enumerate_type(t.elem, ctx)
        out: list[Value] = []
        for r in range(len(elems) + 1):
            for combo in itertools.combinations(elems, r):
                out.append(SetV(combo))
        return tuple(out)
    raise EvalTypeError(f"cannot enumerate {format_type(t)}")


# ---------------------------------------------------------------------------
# Event semantics


def initial_state(m: MachineDef, ctx: Optional[ContextDef] = None) -> State:
    """The unique deterministic initial state: every variable assigned once by
    the init section, right-hand sides referencing only static data."""
    values = {a.var: eval_expr(a.expr, None, None, ctx) for a in m.init}
    return State(values, m.variables)


def enabled_events(
    m: MachineDef, s: State, ctx: Optional[ContextDef] = None
) -> list[EnabledEvent]:
    """Exactly the (event, binding) pairs whose guards all hold, in event
    declaration order then lexicographic binding order."""
    ctx = ctx or _EMPTY_CTX
    out: list[EnabledEvent] = []
    for ev in m.events:
        for binding in _bindings(ev, ctx):
            if all(
                _as_bool(eval_expr(g.expr, s, binding, ctx)) for g in ev.guards
            ):
                out.append(EnabledEvent(ev.name, binding))
    return out


def _bindings(ev: EventDef, ctx: ContextDef) -> Iterable[dict[str, Value]]:
    if not ev.params:
        yield {}
        return
    names = list(ev.params)
    domains = [enumerate_type(t, ctx) for t in ev.params.values()]
    for combo in itertools.product(*domains):
        yield dict(zip(names, combo))


def fire_event(
    m: MachineDef,
    s: State,
    ev: EnabledEvent,
    ctx: Optional[ContextDef] = None,
) -> State:
    """Fires an enabled event: all action right-hand sides are evaluated
    against the pre-state, then applied as one parallel update."""
    ctx = ctx or _EMPTY_CTX
    try:
        edef = m.event(ev.event)
    except KeyError:
        raise EventNotEnabledError(ev.event, "no such event") from None
    if set(edef.params) != set(ev.binding):
        raise EventNotEnabledError(ev.event, "binding does not match parameters")
    for g in edef.guards:
        if not _as_bool(eval_expr(g.expr, s, ev.binding, ctx)):
            raise EventNotEnabledError(ev.event, f"guard '{g.label}' is false")
    updates = [
        (a.var, eval_expr(a.expr, s, ev.binding, ctx)) for a in edef.actions
    ]
    return state_update(s, updates)


def invariant_flags(
    m: MachineDef, s: State, ctx: Optional[ContextDef] = None
) -> dict[str, bool]:
    return {
        lab.label: _as_bool(eval_expr(lab.expr, s, None, ctx))
        for lab in m.invariants
    }


# ---------------------------------------------------------------------------
# Static type checking


# mini-types used for inference
_INT = ("int",)
_BOOL = ("bool",)
_EMPTY_SET = ("emptyset",)


def _mini(t: TypeDesc):
    if isinstance(t, IntType):
        return _INT
    if isinstance(t, BoolType):
        return _BOOL
    if isinstance(t, SymType):
        return ("sym", t.carrier)
    if isinstance(t, SetType):
        return ("set", _mini(t.elem))
    return ("maplet", _mini(t.left), _mini(t.right))


def _mini_name(t) -> str:
    if t == _INT:
        return "int"
    if t == _BOOL:
        return "bool"
    if t == _EMPTY_SET:
        return "{}"
    if t[0] == "sym":
        return t[1]
    if t[0] == "set":
        return "{ " + _mini_name(t[1]) + " }"
    return f"{_mini_name(t[1])} |-> {_mini_name(t[2])}"


def _unifiable(a, b) -> bool:
    if a == b:
        return True
    if a == _EMPTY_SET:
        return b == _EMPTY_SET or b[0] == "set"
    if b == _EMPTY_SET:
        return a[0] == "set"
    if a[0] == "set" and b[0] == "set":
        return _unifiable(a[1], b[1])
    if a[0] == "maplet" and b[0] == "maplet":
        return _unifiable(a[1], b[1]) and _unifiable(a[2], b[2])
    return False


class _TypeContext:
    """Name resolution scopes for one expression site."""

    def __init__(self, ctx: ContextDef, variables=None, params=None,
                 abstract_vars=None):
        self.ctx = ctx
        self.symbols = ctx.symbol_carrier()
        self.variables = variables or {}
        self.params = params or {}
        self.abstract_vars = abstract_vars  # None unless a gluing expression

    def lookup(self, name: str):
        if name in self.params:
            return _mini(self.params[name])
        if name in self.variables:
            return _mini(self.variables[name])
        if (
            self.abstract_vars is not None
            and name.startswith(ABSTRACT_PREFIX)
            and name[len(ABSTRACT_PREFIX):] in self.abstract_vars
        ):
            return _mini(self.abstract_vars[name[len(ABSTRACT_PREFIX):]])
        if name in self.ctx.constants:
            return _value_mini(self.ctx.constants[name])
        if name in self.ctx.sets:
            return ("set", ("sym", name))
        if name in self.symbols:
            return ("sym", self.symbols[name])
        return None


def _value_mini(v: Value):
    if isinstance(v, IntV):
        return _INT
    if isinstance(v, BoolV):
        return _BOOL
    if isinstance(v, SymV):
        return ("sym", v.carrier)
    if isinstance(v, MapletV):
        return ("maplet", _value_mini(v.left), _value_mini(v.right))
    for e in v.elems:
        return ("set", _value_mini(e))
    return _EMPTY_SET


def _expr_span(e: Expr, fallback: SourceSpan) -> SourceSpan:
    for node in e.walk():
        if node.span is not None:
            return node.span
    return fallback


class _Checker:
    def __init__(self):
        self.diags: list[Diagnostic] = []

    def err(self, msg: str, span: SourceSpan):
        self.diags.append(Diagnostic("error", msg, span))

    def warn(self, msg: str, span: SourceSpan):
        self.diags.append(Diagnostic("warning", msg, span))

    def infer(self, e: Expr, tc: _TypeContext, span: SourceSpan):
        """Returns a mini-type or None after recording a diagnostic."""
        k = e.kind
        here = _expr_span(e, span)
        if k == "IntLit":
            return _INT
        if k == "BoolLit":
            return _BOOL
        if k in ("SymbolRef", "VarRef"):
            t = tc.lookup(e.payload)
            if t is None:
                self.err(f"unknown name '{e.payload}'", here)
            return t
        if k == "Not":
            t = self.infer(e.children[0], tc, span)
            if t is not None and t != _BOOL:
                self.err(f"'not' expects a boolean, got {_mini_name(t)}", here)
                return None
            return t and _BOOL
        if k in ("And", "Or", "Implies"):
            ok = True
            for c in e.children:
                t = self.infer(c, tc, span)
                if t is None:
                    ok = False
                elif t != _BOOL:
                    self.err(
                        f"logical operator expects booleans, got {_mini_name(t)}",
                        _expr_span(c, span),
                    )
                    ok = False
            return _BOOL if ok else None
        if k in ("Eq", "Neq"):
            a = self.infer(e.children[0], tc, span)
            b = self.infer(e.children[1], tc, span)
            if a is not None and b is not None and not _unifiable(a, b):
                self.err(
                    f"cannot compare {_mini_name(a)} with {_mini_name(b)}", here
                )
                return None
            return _BOOL
        if k in ("Lt", "Le", "Gt", "Ge", "Add", "Sub", "Mul"):
            ok = True
            for c in e.children:
                t = self.infer(c, tc, span)
                if t is None:
                    ok = False
                elif t != _INT:
                    self.err(
                        f"arithmetic/comparison expects integers, got "
                        f"{_mini_name(t)}",
                        _expr_span(c, span),
                    )
                    ok = False
            if not ok:
                return None
            return _BOOL if k in ("Lt", "Le", "Gt", "Ge") else _INT
        if k == "In":
            elem = self.infer(e.children[0], tc, span)
            container = self.infer(e.children[1], tc, span)
            if container is None or elem is None:
                return _BOOL
            if container == _EMPTY_SET:
                return _BOOL
            if container[0] != "set":
                self.err(
                    f"right operand of 'in' must be a set, got "
                    f"{_mini_name(container)}",
                    here,
                )
                return None
            if not _unifiable(elem, container[1]):
                self.err(
                    f"'in' element type {_mini_name(elem)} does not match set "
                    f"of {_mini_name(container[1])}",
                    here,
                )
            return _BOOL
        if k == "SetLit":
            elem_t = None
            for c in e.children:
                t = self.infer(c, tc, span)
                if t is None:
                    continue
                if elem_t is None or elem_t == _EMPTY_SET:
                    elem_t = t
                elif not _unifiable(elem_t, t):
                    self.err(
                        f"mixed element types in set literal: "
                        f"{_mini_name(elem_t)} vs {_mini_name(t)}",
                        _expr_span(c, span),
                    )
            return ("set", elem_t) if elem_t is not None else _EMPTY_SET
        if k == "Maplet":
            a = self.infer(e.children[0], tc, span)
            b = self.infer(e.children[1], tc, span)
            if a is None or b is None:
                return None
            return ("maplet", a, b)
        return None  # pragma: no cover

    def check_bool(self, what: str, e: Expr, tc: _TypeContext, span: SourceSpan):
        t = self.infer(e, tc, span)
        if t is not None and t != _BOOL:
            self.err(f"{what} must be boolean, got {_mini_name(t)}",
                     _expr_span(e, span))


def _descriptor_faults(t: TypeDesc, ctx: ContextDef) -> list[str]:
    if isinstance(t, SymType):
        if t.carrier not in ctx.sets:
            return [f"unknown carrier set '{t.carrier}'"]
        return []
    if isinstance(t, SetType):
        return _descriptor_faults(t.elem, ctx)
    if isinstance(t, MapletType):
        return _descriptor_faults(t.left, ctx) + _descriptor_faults(t.right, ctx)
    return []


def type_check(defs: Iterable[Union[ContextDef, MachineDef]]) -> list[Diagnostic]:
    """Static well-definedness pass over a load set: every reference resolves,
    every expression is well-typed, every event respects assignment rules.
    Returns one Diagnostic per fault (empty means consistent)."""
    defs = list(defs)
    contexts = {d.name: d for d in defs if isinstance(d, ContextDef)}
    machines = {d.name: d for d in defs if isinstance(d, MachineDef)}
    ck = _Checker()
    nowhere = SourceSpan("<model>", 1, 1, 1, 1)

    # contexts: extends chain + axiom typing
    for c in contexts.values():
        span = c.span or nowhere
        seen: set[str] = set()
        cur = c
        while cur.extends is not None:
            if cur.extends in seen or cur.extends == c.name:
                ck.err(f"context extends cycle through '{c.name}'", span)
                break
            if cur.extends not in contexts:
                ck.err(f"unknown context '{cur.extends}'", span)
                break
            seen.add(cur.extends)
            cur = contexts[cur.extends]
        else:
            try:
                merged = merge_contexts(context_closure(c.name, contexts))
            except ValueError as exc:
                ck.err(str(exc), span)
                continue
            tc = _TypeContext(merged)
            for lab in c.axioms:
                ck.check_bool(f"axiom '{lab.label}'", lab.expr, tc, span)

    for m in machines.values():
        _check_machine(ck, m, contexts, machines)
    return ck.diags


def _check_machine(ck: _Checker, m: MachineDef,
                   contexts: Mapping[str, ContextDef],
                   machines: Mapping[str, MachineDef]):
    span = m.span or SourceSpan("<model>", 1, 1, 1, 1)
    for seen in m.sees:
        if seen not in contexts:
            ck.err(f"machine '{m.name}' sees unknown context '{seen}'", span)
            return
    try:
        ctx = machine_context(m, contexts)
    except (ValueError, KeyError) as exc:
        ck.err(f"context resolution failed for '{m.name}': {exc}", span)
        return

    # refinement chain resolution (cycle-safe)
    abstract: Optional[MachineDef] = None
    if m.refines is not None:
        hop, cur = 0, m.refines
        while cur is not None:
            if cur == m.name or hop > len(machines):
                ck.err(f"refinement cycle through '{m.name}'", span)
                return
            if cur not in machines:
                if hop == 0:
                    ck.warn(
                        f"abstract machine '{m.refines}' not in load set; "
                        f"refinement obligations for '{m.name}' unavailable",
                        span,
                    )
                break
            if hop == 0:
                abstract = machines[cur]
            cur = machines[cur].refines
            hop += 1

    for name, t in m.variables.items():
        for fault in _descriptor_faults(t, ctx):
            ck.err(f"variable '{name}': {fault}", span)
        if name in ctx.constants or name in ctx.symbol_carrier() or name in ctx.sets:
            ck.err(f"variable '{name}' shadows static data", span)

    tc_state = _TypeContext(ctx, variables=m.variables)

    for lab in m.invariants:
        ck.check_bool(f"invariant '{lab.label}'", lab.expr, tc_state, span)

    if m.gluing:
        if abstract is None:
            ck.warn(
                f"gluing invariants of '{m.name}' not checked (abstract machine "
                f"unavailable)", span)
        else:
            tc_glue = _TypeContext(ctx, variables=m.variables,
                                   abstract_vars=abstract.variables)
            for lab in m.gluing:
                ck.check_bool(f"gluing invariant '{lab.label}'", lab.expr,
                              tc_glue, span)

    if m.variant is not None:
        t = ck.infer(m.variant, tc_state, span)
        if t is not None and t != _INT:
            ck.err(f"variant must be integer-valued, got {_mini_name(t)}",
                   _expr_span(m.variant, span))
    for ev in m.events:
        if ev.status == "convergent" and m.variant is None:
            ck.err(
                f"convergent event '{ev.name}' requires the machine to declare "
                f"a variant", ev.span or span)

    # init must assign every variable exactly once, from static data only
    tc_static = _TypeContext(ctx)
    assigned = set()
    for a in m.init:
        if a.var not in m.variables:
            ck.err(f"init assigns undeclared variable '{a.var}'",
                   _expr_span(a.expr, span))
            continue
        if a.var in assigned:
            ck.err(f"init assigns '{a.var}' more than once",
                   _expr_span(a.expr, span))
        assigned.add(a.var)
        t = ck.infer(a.expr, tc_static, span)
        if t is not None and not _unifiable(t, _mini(m.variables[a.var])):
            ck.err(
                f"init of '{a.var}' has type {_mini_name(t)}, variable is "
                f"{format_type(m.variables[a.var])}", _expr_span(a.expr, span))
    for missing in m.variables:
        if missing not in assigned:
            ck.err(f"init does not assign variable '{missing}'", span)

    for name in m.priority:
        try:
            m.event(name)
        except KeyError:
            ck.err(f"priority clause names unknown event '{name}'", span)
    if len(set(m.priority)) != len(m.priority):
        ck.err("priority clause repeats an event", span)

    for ev in m.events:
        _check_event(ck, m, ev, ctx, abstract, span)


def _check_event(ck: _Checker, m: MachineDef, ev: EventDef, ctx: ContextDef,
                 abstract: Optional[MachineDef], mspan: SourceSpan):
    span = ev.span or mspan
    for pname, pt in ev.params.items():
        for fault in _descriptor_faults(pt, ctx):
            ck.err(f"parameter '{pname}' of '{ev.name}': {fault}", span)
        if pname in m.variables:
            ck.err(f"parameter '{pname}' of '{ev.name}' shadows a variable",
                   span)
    tc = _TypeContext(ctx, variables=m.variables, params=ev.params)
    for g in ev.guards:
        ck.check_bool(f"guard '{g.label}' of '{ev.name}'", g.expr, tc, span)
    for a in ev.actions:
        if a.var not in m.variables:
            ck.err(f"event '{ev.name}' assigns undeclared variable '{a.var}'",
                   _expr_span(a.expr, span))
            continue
        t = ck.infer(a.expr, tc, span)
        if t is not None and not _unifiable(t, _mini(m.variables[a.var])):
            ck.err(
                f"action '{a.label}' of '{ev.name}' assigns {_mini_name(t)} to "
                f"'{a.var}' ({format_type(m.variables[a.var])})",
                _expr_span(a.expr, span))
    if ev.refines is not None and abstract is not None:
        try:
            aev = abstract.event(ev.refines)
        except KeyError:
            ck.err(
                f"event '{ev.name}' refines unknown abstract event "
                f"'{ev.refines}'", span)
            return
        for pname, pt in aev.params.items():
            if pname not in ev.params:
                ck.err(
                    f"event '{ev.name}' is missing parameter '{pname}' of the "
                    f"abstract event it refines", span)
            elif _mini(ev.params[pname]) != _mini(pt):
                ck.err(
                    f"parameter '{pname}' of '{ev.name}' differs in type from "
                    f"the abstract event's", span)


__all__ = [
    "Binding",
    "EnabledEvent",
    "enabled_events",
    "enumerate_type",
    "eval_expr",
    "fire_event",
    "initial_state",
    "invariant_flags",
    "machine_context",
    "merge_contexts",
    "context_closure",
    "type_check",
]
