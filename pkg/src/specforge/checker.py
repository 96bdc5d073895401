"""Bounded explicit-state verification.

One breadth-first exploration underlies every obligation kind. Expressions
are compiled to Python closures over plain-value state tuples (ints, bools,
symbol name strings, frozensets, pairs) for speed; kernel values appear only
at the boundaries (counterexamples, the public explore result). "proved"
means: holds on every state reachable within the configured bounds, and each
report carries the bound-exhausted flag.

Counterexamples are depth-minimal: BFS order, with successors generated in
event declaration order then lexicographic binding order, makes the first
discovery of any state the lexicographically least among its shortest traces.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

from .errors import (
    BoundsViolationError,
    GluingUnderspecifiedError,
    MissingVariantError,
    SpecForgeError,
    UnboundNameError,
)
from .evaluator import initial_state, machine_context
from .kernel import (
    ABSTRACT_PREFIX,
    BoolType,
    BoolV,
    ContextDef,
    EventDef,
    Expr,
    IntType,
    IntV,
    MachineDef,
    MapletType,
    MapletV,
    SetV,
    State,
    SymType,
    SymV,
    TypeDesc,
    Value,
    format_value,
)

OBLIGATION_KINDS = ("INV", "DLK", "VAR", "ENB", "GRD_REF", "SIM_REF", "AXM", "INIT")


@dataclass(frozen=True)
class ExploreConfig:
    max_states: int = 1_000_000
    max_depth: Optional[int] = None
    checks: frozenset = frozenset(OBLIGATION_KINDS)

    def __post_init__(self):
        if self.max_states < 1:
            raise ValueError("max_states must be >= 1")
        bad = set(self.checks) - set(OBLIGATION_KINDS)
        if bad:
            raise ValueError(f"unknown obligation kinds: {sorted(bad)}")


@dataclass(frozen=True)
class Counterexample:
    """Shortest violating run: starts at the initial state; each step is a
    legal fire_event transition; depth = number of fired events."""

    init: State
    steps: tuple  # of (event name, binding dict, state after)
    violated: str
    depth: int

    def final_state(self) -> State:
        return self.steps[-1][2] if self.steps else self.init


@dataclass(frozen=True)
class Obligation:
    kind: str
    machine: str
    subject: str
    verdict: str  # proved | violated | bound-exhausted
    counterexample: Optional[Counterexample] = None
    message: str = ""

    def __post_init__(self):
        if self.verdict == "violated" and self.counterexample is None:
            raise ValueError("violated obligation requires a counterexample")


@dataclass
class CheckReport:
    machine: str
    obligations: list = field(default_factory=list)
    states_explored: int = 0
    transitions: int = 0
    bound_exhausted: bool = False
    errors: list = field(default_factory=list)  # e.g. GluingUnderspecified

    @property
    def worst(self) -> str:
        verdicts = [o.verdict for o in self.obligations]
        if self.errors or "violated" in verdicts:
            return "violated"
        if self.bound_exhausted or "bound-exhausted" in verdicts:
            return "bound-exhausted"
        return "proved"


# ---------------------------------------------------------------------------
# Plain-value encoding


def _plain(v: Value):
    if isinstance(v, IntV):
        return v.value
    if isinstance(v, BoolV):
        return v.value
    if isinstance(v, SymV):
        return v.name
    if isinstance(v, MapletV):
        return (_plain(v.left), _plain(v.right))
    return frozenset(_plain(e) for e in v.elems)


def _rich(p, desc: TypeDesc, symbols: Mapping[str, str]) -> Value:
    if isinstance(desc, IntType):
        return IntV(p)
    if isinstance(desc, BoolType):
        return BoolV(p)
    if isinstance(desc, SymType):
        return SymV(p, symbols[p])
    if isinstance(desc, MapletType):
        return MapletV(_rich(p[0], desc.left, symbols),
                       _rich(p[1], desc.right, symbols))
    return SetV(_rich(e, desc.elem, symbols) for e in p)


def _plain_sort_key(p):
    if isinstance(p, bool):
        return (1, p)
    if isinstance(p, int):
        return (0, p)
    if isinstance(p, str):
        return (2, p)
    if isinstance(p, tuple):
        return (3, tuple(_plain_sort_key(x) for x in p))
    return (4, tuple(sorted(_plain_sort_key(x) for x in p)))


def _enum_plain(desc: TypeDesc, ctx: ContextDef) -> tuple:
    if isinstance(desc, IntType):
        return tuple(range(desc.lo, desc.hi + 1))
    if isinstance(desc, BoolType):
        return (False, True)
    if isinstance(desc, SymType):
        return tuple(ctx.sets[desc.carrier])
    if isinstance(desc, MapletType):
        return tuple((a, b) for a in _enum_plain(desc.left, ctx)
                     for b in _enum_plain(desc.right, ctx))
    elems = _enum_plain(desc.elem, ctx)
    out = []
    for r in range(len(elems) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(elems, r))
    return tuple(out)


# ---------------------------------------------------------------------------
# Expression compilation


def _compile(e: Expr, var_ix: Mapping[str, int], param_ix: Mapping[str, int],
             ctx: ContextDef, symbols: Mapping[str, str]
             ) -> tuple[Callable, bool]:
    """Returns (closure(state_tuple, binding_tuple) -> plain, uses_binding)."""
    k = e.kind
    if k == "IntLit":
        v = e.payload
        return (lambda s, b: v), False
    if k == "BoolLit":
        v = e.payload
        return (lambda s, b: v), False
    if k == "SymbolRef":
        v = e.payload
        return (lambda s, b: v), False
    if k == "VarRef":
        name = e.payload
        if name in param_ix:
            i = param_ix[name]
            return (lambda s, b: b[i]), True
        if name in var_ix:
            i = var_ix[name]
            return (lambda s, b: s[i]), False
        if name in ctx.constants:
            v = _plain(ctx.constants[name])
            return (lambda s, b: v), False
        if name in ctx.sets:
            v = frozenset(ctx.sets[name])
            return (lambda s, b: v), False
        if name in symbols:
            return (lambda s, b: name), False
        raise UnboundNameError(name)
    if k == "Not":
        f, u = _compile(e.children[0], var_ix, param_ix, ctx, symbols)
        return (lambda s, b: not f(s, b)), u
    subs = [_compile(c, var_ix, param_ix, ctx, symbols) for c in e.children]
    uses = any(u for _, u in subs)
    if k == "SetLit":
        fns = [f for f, _ in subs]
        return (lambda s, b: frozenset(f(s, b) for f in fns)), uses
    f, g = subs[0][0], subs[1][0]
    table = {
        "And": lambda s, b: f(s, b) and g(s, b),
        "Or": lambda s, b: f(s, b) or g(s, b),
        "Implies": lambda s, b: (not f(s, b)) or g(s, b),
        "Eq": lambda s, b: f(s, b) == g(s, b),
        "Neq": lambda s, b: f(s, b) != g(s, b),
        "Lt": lambda s, b: f(s, b) < g(s, b),
        "Le": lambda s, b: f(s, b) <= g(s, b),
        "Gt": lambda s, b: f(s, b) > g(s, b),
        "Ge": lambda s, b: f(s, b) >= g(s, b),
        "Add": lambda s, b: f(s, b) + g(s, b),
        "Sub": lambda s, b: f(s, b) - g(s, b),
        "Mul": lambda s, b: f(s, b) * g(s, b),
        "In": lambda s, b: f(s, b) in g(s, b),
        "Maplet": lambda s, b: (f(s, b), g(s, b)),
    }
    return table[k], uses


class _CompiledEvent:
    __slots__ = ("name", "index", "status", "refines", "param_names",
                 "param_descs", "bindings", "free_guards", "bound_guards",
                 "actions", "edef")

    def __init__(self, index: int, ev: EventDef, cm: "CompiledMachine"):
        self.index = index
        self.name = ev.name
        self.status = ev.status
        self.refines = ev.refines
        self.edef = ev
        self.param_names = tuple(ev.params)
        self.param_descs = tuple(ev.params.values())
        param_ix = {n: i for i, n in enumerate(self.param_names)}
        domains = [_enum_plain(t, cm.ctx) for t in self.param_descs]
        self.bindings = tuple(itertools.product(*domains)) if domains else ((),)
        self.free_guards = []
        self.bound_guards = []
        for g in ev.guards:
            fn, uses = _compile(g.expr, cm.var_ix, param_ix, cm.ctx, cm.symbols)
            (self.bound_guards if uses else self.free_guards).append(fn)
        self.actions = [
            (cm.var_ix[a.var],
             _compile(a.expr, cm.var_ix, param_ix, cm.ctx, cm.symbols)[0])
            for a in ev.actions
        ]


class CompiledMachine:
    def __init__(self, m: MachineDef, ctx: Optional[ContextDef] = None,
                 contexts: Optional[Mapping[str, ContextDef]] = None):
        if ctx is None:
            ctx = machine_context(m, contexts or {})
        self.m = m
        self.ctx = ctx
        self.symbols = ctx.symbol_carrier()
        self.var_names = tuple(m.variables)
        self.var_ix = {n: i for i, n in enumerate(self.var_names)}
        self.descs = tuple(m.variables[n] for n in self.var_names)
        self.int_slots = tuple(
            (i, d.lo, d.hi) for i, d in enumerate(self.descs)
            if isinstance(d, IntType)
        )
        self.events = tuple(_CompiledEvent(i, ev, self)
                            for i, ev in enumerate(m.events))
        self.invariants = tuple(
            (lab.label, _compile(lab.expr, self.var_ix, {}, ctx, self.symbols)[0])
            for lab in m.invariants
        )
        self.variant = (
            _compile(m.variant, self.var_ix, {}, ctx, self.symbols)[0]
            if m.variant is not None else None
        )
        init = initial_state(m, ctx)  # validates bounds/typing dynamically
        self.init_tuple = tuple(_plain(init[n]) for n in self.var_names)

    # -- boundary conversions

    def to_state(self, t: tuple) -> State:
        return State(
            {n: _rich(t[i], self.descs[i], self.symbols)
             for i, n in enumerate(self.var_names)},
            self.m.variables,
        )

    def binding_dict(self, ev: _CompiledEvent, b: tuple) -> dict:
        return {
            n: _rich(b[i], ev.param_descs[i], self.symbols)
            for i, n in enumerate(ev.param_names)
        }

    def enabled_plain(self, s: tuple) -> list:
        """(event, binding) pairs with all guards true, in canonical order."""
        out = []
        for ev in self.events:
            if not all(g(s, ()) for g in ev.free_guards):
                continue
            for b in ev.bindings:
                if all(g(s, b) for g in ev.bound_guards):
                    out.append((ev, b))
        return out

    def fire_plain(self, s: tuple, ev: _CompiledEvent, b: tuple) -> tuple:
        """Successor tuple; raises BoundsViolationError on an out-of-bounds
        integer write."""
        new = list(s)
        for slot, fn in ev.actions:
            new[slot] = fn(s, b)
        for slot, lo, hi in self.int_slots:
            v = new[slot]
            if v < lo or v > hi:
                raise BoundsViolationError(self.var_names[slot], v, lo, hi)
        return tuple(new)


# ---------------------------------------------------------------------------
# Exploration


@dataclass
class ExploreResult:
    cm: CompiledMachine
    info: dict  # state tuple -> (depth, parent tuple|None, event, binding)
    transitions: list  # (pre, event, binding, post)
    enabled_count: dict  # state tuple -> number of enabled (event, binding)
    inv_firsts: dict  # label -> first violating state tuple (BFS order)
    init_violations: tuple  # labels false at the initial state
    bounds_faults: list  # (pre, event, binding, error) first per (event, var)
    deadlock_first: Optional[tuple]
    exhausted: bool
    init_fault: Optional[str] = None

    @property
    def states(self) -> int:
        return len(self.info)

    def trace_to(self, t: tuple, violated: str,
                 extra_step: Optional[tuple] = None) -> Counterexample:
        steps = []
        cur = t
        while True:
            depth, parent, ev, b = self.info[cur]
            if parent is None:
                break
            steps.append((ev.name, self.cm.binding_dict(ev, b),
                          self.cm.to_state(cur)))
            cur = parent
        steps.reverse()
        if extra_step is not None:
            ev, b, post = extra_step
            steps.append((ev.name, self.cm.binding_dict(ev, b),
                          self.cm.to_state(post)))
        return Counterexample(
            init=self.cm.to_state(self.cm.init_tuple),
            steps=tuple(steps),
            violated=violated,
            depth=len(steps),
        )


def _explore_full(cm: CompiledMachine, cfg: ExploreConfig) -> ExploreResult:
    inv_firsts: dict = {}
    init_violations = tuple(
        label for label, fn in cm.invariants if not fn(cm.init_tuple, ())
    )
    for label in init_violations:
        inv_firsts[label] = cm.init_tuple

    info = {cm.init_tuple: (0, None, None, None)}
    queue = deque([cm.init_tuple])
    transitions: list = []
    enabled_count: dict = {}
    bounds_faults: list = []
    bounds_seen: set = set()
    deadlock_first: Optional[tuple] = None
    exhausted = False

    while queue:
        s = queue.popleft()
        depth = info[s][0]
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            exhausted = True
            enabled_count[s] = len(cm.enabled_plain(s))
            continue
        n_enabled = 0
        for ev in cm.events:
            if not all(g(s, ()) for g in ev.free_guards):
                continue
            for b in ev.bindings:
                if not all(g(s, b) for g in ev.bound_guards):
                    continue
                n_enabled += 1
                try:
                    post = cm.fire_plain(s, ev, b)
                except BoundsViolationError as exc:
                    key = (ev.name, exc.name)
                    if key not in bounds_seen:
                        bounds_seen.add(key)
                        bounds_faults.append((s, ev, b, exc))
                    continue
                transitions.append((s, ev, b, post))
                if post not in info:
                    if len(info) >= cfg.max_states:
                        exhausted = True
                        continue
                    info[post] = (depth + 1, s, ev, b)
                    for label, fn in cm.invariants:
                        if label not in inv_firsts and not fn(post, ()):
                            inv_firsts[label] = post
                    queue.append(post)
        enabled_count[s] = n_enabled
        if n_enabled == 0 and deadlock_first is None:
            deadlock_first = s
    return ExploreResult(
        cm=cm, info=info, transitions=transitions, enabled_count=enabled_count,
        inv_firsts=inv_firsts, init_violations=init_violations,
        bounds_faults=bounds_faults, deadlock_first=deadlock_first,
        exhausted=exhausted,
    )


def _compiled(m: MachineDef, ctx: Optional[ContextDef],
              contexts: Optional[Mapping[str, ContextDef]]) -> CompiledMachine:
    return CompiledMachine(m, ctx=ctx, contexts=contexts)


# ---------------------------------------------------------------------------
# Public checks


def explore(m: MachineDef, cfg: Optional[ExploreConfig] = None,
            ctx: Optional[ContextDef] = None,
            _run: Optional[ExploreResult] = None):
    """BFS reachability. Returns (reachable kernel-state frozenset,
    transition count, bound-exhausted flag)."""
    cfg = cfg or ExploreConfig()
    run = _run or _explore_full(_compiled(m, ctx, None), cfg)
    states = frozenset(run.cm.to_state(t) for t in run.info)
    return states, len(run.transitions), run.exhausted


def _verdict(violated: bool, exhausted: bool) -> str:
    if violated:
        return "violated"
    return "bound-exhausted" if exhausted else "proved"


def check_invariants(m: MachineDef, cfg: Optional[ExploreConfig] = None,
                     ctx: Optional[ContextDef] = None,
                     _run: Optional[ExploreResult] = None) -> list[Obligation]:
    """One INV obligation per invariant label (plus the INIT obligation and
    any dynamic bounds findings); violations carry shortest counterexamples."""
    cfg = cfg or ExploreConfig()
    run = _run or _explore_full(_compiled(m, ctx, None), cfg)
    out = [Obligation(
        kind="INIT", machine=m.name, subject="init",
        verdict=_verdict(bool(run.init_violations), False),
        counterexample=(
            run.trace_to(run.cm.init_tuple, ", ".join(run.init_violations))
            if run.init_violations else None),
        message=("initial state violates: " + ", ".join(run.init_violations)
                 if run.init_violations else ""),
    )]
    for lab in m.invariants:
        first = run.inv_firsts.get(lab.label)
        out.append(Obligation(
            kind="INV", machine=m.name, subject=lab.label,
            verdict=_verdict(first is not None, run.exhausted),
            counterexample=(run.trace_to(first, lab.label)
                            if first is not None else None),
        ))
    for pre, ev, b, exc in run.bounds_faults:
        cex = run.trace_to(pre, str(exc))
        out.append(Obligation(
            kind="INV", machine=m.name, subject=f"bounds({exc.name})",
            verdict="violated", counterexample=cex,
            message=f"event '{ev.name}' writes out of bounds: {exc}",
        ))
    return out


def check_deadlock(m: MachineDef, cfg: Optional[ExploreConfig] = None,
                   ctx: Optional[ContextDef] = None,
                   _run: Optional[ExploreResult] = None) -> Obligation:
    """Violated iff some reachable state enables nothing; the counterexample
    is the shortest path to the first such state."""
    cfg = cfg or ExploreConfig()
    run = _run or _explore_full(_compiled(m, ctx, None), cfg)
    first = run.deadlock_first
    return Obligation(
        kind="DLK", machine=m.name, subject=m.name,
        verdict=_verdict(first is not None, run.exhausted),
        counterexample=(run.trace_to(first, "deadlock")
                        if first is not None else None),
        message="" if first is None else "no event is enabled in the final state",
    )


def check_variant(m: MachineDef, cfg: Optional[ExploreConfig] = None,
                  ctx: Optional[ContextDef] = None,
                  _run: Optional[ExploreResult] = None) -> list[Obligation]:
    """One VAR obligation per convergent event: on every reachable transition
    it fires, the variant starts non-negative and strictly decreases."""
    cfg = cfg or ExploreConfig()
    convergent = [ev for ev in m.events if ev.status == "convergent"]
    for ev in convergent:
        if m.variant is None:
            raise MissingVariantError(m.name, ev.name)
    if not convergent:
        return []
    run = _run or _explore_full(_compiled(m, ctx, None), cfg)
    variant = run.cm.variant
    firsts: dict = {}
    for pre, ev, b, post in run.transitions:
        if ev.status != "convergent" or ev.name in firsts:
            continue
        before, after = variant(pre, ()), variant(post, ())
        if before < 0:
            firsts[ev.name] = (pre, ev, b, post,
                               f"variant is negative before firing ({before})")
        elif after >= before:
            firsts[ev.name] = (pre, ev, b, post,
                               f"variant does not decrease ({before} -> {after})")
    out = []
    for ev in convergent:
        hit = firsts.get(ev.name)
        if hit is None:
            out.append(Obligation(
                kind="VAR", machine=m.name, subject=ev.name,
                verdict=_verdict(False, run.exhausted)))
        else:
            pre, cev, b, post, why = hit
            cex = run.trace_to(pre, f"variant of '{ev.name}'",
                               extra_step=(cev, b, post))
            out.append(Obligation(
                kind="VAR", machine=m.name, subject=ev.name,
                verdict="violated", counterexample=cex, message=why))
    return out


# ---------------------------------------------------------------------------
# Refinement checking


class _GlueSolver:
    """Maps concrete state tuples to the unique abstract state tuple
    satisfying the gluing invariant; raises GluingUnderspecifiedError when the
    glue admits zero or several candidates.

    Conjuncts of shape `abs_x = <concrete expr>` are solved directly; any
    remaining abstract variables are enumerated over their domains and
    filtered by the residual predicates."""

    def __init__(self, cmc: CompiledMachine, cma: CompiledMachine):
        abs_ix = {ABSTRACT_PREFIX + n: i for n, i in cma.var_ix.items()}
        self.cma = cma
        self.cmc = cmc
        self.pins: dict[int, Callable] = {}
        residuals: list[Callable] = []
        for lab in cmc.m.gluing:
            for conj in _conjuncts(lab.expr):
                slot, rhs = _pin_form(conj, abs_ix, cmc)
                if slot is not None and slot not in self.pins:
                    self.pins[slot] = rhs
                else:
                    fn, _ = _compile(conj, cmc.var_ix, abs_ix, cmc.ctx,
                                     cmc.symbols)
                    residuals.append(fn)
        self.residuals = residuals
        self.free_slots = [i for i in range(len(cma.var_names))
                           if i not in self.pins]
        self.free_domains = [_enum_plain(cma.descs[i], cma.ctx)
                             for i in self.free_slots]
        self.abs_bounds = {i: (d.lo, d.hi) for i, d in enumerate(cma.descs)
                           if isinstance(d, IntType)}
        self._cache: dict = {}

    def solve(self, s: tuple) -> tuple:
        hit = self._cache.get(s)
        if hit is not None:
            return hit
        n = len(self.cma.var_names)
        base: list = [None] * n
        for slot, fn in self.pins.items():
            v = fn(s, ())
            lo_hi = self.abs_bounds.get(slot)
            if lo_hi is not None and not (lo_hi[0] <= v <= lo_hi[1]):
                raise GluingUnderspecifiedError(
                    self.cmc.m.name, _state_text(self.cmc, s), 0)
            base[slot] = v
        found: Optional[tuple] = None
        if self.free_slots:
            for combo in itertools.product(*self.free_domains):
                cand = list(base)
                for slot, v in zip(self.free_slots, combo):
                    cand[slot] = v
                cand_t = tuple(cand)
                if all(fn(s, cand_t) for fn in self.residuals):
                    if found is not None:
                        raise GluingUnderspecifiedError(
                            self.cmc.m.name, _state_text(self.cmc, s), 2)
                    found = cand_t
        else:
            cand_t = tuple(base)
            if all(fn(s, cand_t) for fn in self.residuals):
                found = cand_t
        if found is None:
            raise GluingUnderspecifiedError(
                self.cmc.m.name, _state_text(self.cmc, s), 0)
        self._cache[s] = found
        return found


def _conjuncts(e: Expr):
    if e.kind == "And":
        yield from _conjuncts(e.children[0])
        yield from _conjuncts(e.children[1])
    else:
        yield e


def _pin_form(e: Expr, abs_ix: Mapping[str, int], cmc: CompiledMachine):
    """Recognizes `abs_x = rhs` / `rhs = abs_x` with rhs free of abstract
    references; returns (abstract slot, compiled rhs) or (None, None)."""
    if e.kind != "Eq":
        return None, None
    for lhs, rhs in ((e.children[0], e.children[1]),
                     (e.children[1], e.children[0])):
        if lhs.kind == "VarRef" and lhs.payload in abs_ix:
            if any(n.kind == "VarRef" and n.payload in abs_ix
                   for n in rhs.walk()):
                continue
            try:
                fn, _ = _compile(rhs, cmc.var_ix, {}, cmc.ctx, cmc.symbols)
            except UnboundNameError:
                continue
            return abs_ix[lhs.payload], fn
    return None, None


def _state_text(cm: CompiledMachine, t: tuple) -> str:
    return "{" + ", ".join(
        f"{n}={format_value(_rich(t[i], cm.descs[i], cm.symbols))}"
        for i, n in enumerate(cm.var_names)) + "}"


def check_refinement(concrete: MachineDef, abstract: MachineDef,
                     cfg: Optional[ExploreConfig] = None,
                     ctx_concrete: Optional[ContextDef] = None,
                     ctx_abstract: Optional[ContextDef] = None,
                     _run: Optional[ExploreResult] = None) -> list[Obligation]:
    """Explicit-state simulation over the concrete reachable set:

    GRD_REF  - wherever a refining event is enabled, its abstract counterpart
               is enabled in the glued abstract state;
    SIM_REF  - firing the refining event commutes with the glue (events with
               no abstract counterpart must stutter and be convergent);
    ENB      - if the glued abstract state enables anything, the concrete
               state enables something.
    """
    if concrete.refines != abstract.name:
        raise ValueError(
            f"'{concrete.name}' does not declare refines {abstract.name}")
    cfg = cfg or ExploreConfig()
    run = _run or _explore_full(_compiled(concrete, ctx_concrete, None), cfg)
    cmc = run.cm
    cma = _compiled(abstract, ctx_abstract or cmc.ctx, None)
    solver = _GlueSolver(cmc, cma)
    abs_events = {ev.name: ev for ev in cma.events}

    grd_firsts: dict = {}
    sim_firsts: dict = {}
    enb_first = None

    def abstract_enabled(aev, alpha: tuple, ab: tuple) -> bool:
        return (all(g(alpha, ()) for g in aev.free_guards)
                and all(g(alpha, ab) for g in aev.bound_guards))

    # ENB: walk states in BFS order (skipping states beyond the bound, which
    # were never expanded)
    for s in run.info:
        if run.enabled_count.get(s, -1) == 0 and enb_first is None:
            alpha = solver.solve(s)
            if any(abstract_enabled(aev, alpha, ab)
                   for aev in cma.events for ab in aev.bindings):
                enb_first = s
                break

    # GRD_REF / SIM_REF: walk transitions (BFS discovery order)
    for pre, ev, b, post in run.transitions:
        if ev.name in sim_firsts and ev.name in grd_firsts:
            continue
        alpha = solver.solve(pre)
        if ev.refines is None:
            if ev.name in sim_firsts:
                continue
            alpha_post = solver.solve(post)
            if alpha_post != alpha:
                sim_firsts[ev.name] = (pre, ev, b, post,
                                       "event without abstract counterpart "
                                       "changes the glued abstract state")
            elif ev.status != "convergent":
                sim_firsts[ev.name] = (pre, ev, b, post,
                                       "event without abstract counterpart "
                                       "must be convergent")
            continue
        aev = abs_events.get(ev.refines)
        if aev is None:
            if ev.name not in grd_firsts:
                grd_firsts[ev.name] = (pre, ev, b,
                                       f"abstract event '{ev.refines}' does "
                                       f"not exist")
            continue
        proj = {n: v for n, v in zip(ev.param_names, b)}
        ab = tuple(proj[n] for n in aev.param_names)
        if not abstract_enabled(aev, alpha, ab):
            if ev.name not in grd_firsts:
                grd_firsts[ev.name] = (pre, ev, b,
                                       f"abstract '{aev.name}' disabled in "
                                       f"glued state")
            continue
        if ev.name in sim_firsts:
            continue
        try:
            expected = cma.fire_plain(alpha, aev, ab)
        except BoundsViolationError as exc:
            sim_firsts[ev.name] = (pre, ev, b, post,
                                   f"abstract step leaves bounds: {exc}")
            continue
        alpha_post = solver.solve(post)
        if alpha_post != expected:
            sim_firsts[ev.name] = (
                pre, ev, b, post,
                f"glued successor {_state_text(cma, alpha_post)} differs from "
                f"abstract successor {_state_text(cma, expected)}")

    out = []
    for ev in concrete.events:
        if ev.refines is not None:
            hit = grd_firsts.get(ev.name)
            out.append(Obligation(
                kind="GRD_REF", machine=concrete.name, subject=ev.name,
                verdict=_verdict(hit is not None, run.exhausted),
                counterexample=(run.trace_to(hit[0], f"guard of '{ev.name}'")
                                if hit else None),
                message=hit[3] if hit else ""))
        hit = sim_firsts.get(ev.name)
        out.append(Obligation(
            kind="SIM_REF", machine=concrete.name, subject=ev.name,
            verdict=_verdict(hit is not None, run.exhausted),
            counterexample=(
                run.trace_to(hit[0], f"simulation of '{ev.name}'",
                             extra_step=(hit[1], hit[2], hit[3]))
                if hit else None),
            message=hit[4] if hit else ""))
    out.append(Obligation(
        kind="ENB", machine=concrete.name, subject=abstract.name,
        verdict=_verdict(enb_first is not None, run.exhausted),
        counterexample=(run.trace_to(enb_first, "enabledness preservation")
                        if enb_first is not None else None),
        message=("concrete state enables nothing while the glued abstract "
                 "state does" if enb_first is not None else "")))
    return out


# ---------------------------------------------------------------------------
# Context axioms


def check_axioms(c: ContextDef,
                 contexts: Optional[Mapping[str, ContextDef]] = None
                 ) -> list[Obligation]:
    from .evaluator import context_closure, eval_expr, merge_contexts

    merged = merge_contexts(context_closure(c.name, {**(contexts or {}),
                                                     c.name: c}))
    out = []
    for lab in c.axioms:
        holds = eval_expr(lab.expr, None, None, merged)
        out.append(Obligation(
            kind="AXM", machine=c.name, subject=lab.label,
            verdict="proved" if holds.value else "violated",
            counterexample=None if holds.value else Counterexample(
                init=State({}, {}), steps=(), violated=lab.label, depth=0),
            message="" if holds.value else "axiom is false under the "
                                           "constant bindings"))
    return out


# ---------------------------------------------------------------------------
# Whole-model driver (shared exploration per machine)


def run_checks(defs: Sequence[Union[ContextDef, MachineDef]],
               cfg: Optional[ExploreConfig] = None,
               only_machines: Optional[Sequence[str]] = None
               ) -> list[CheckReport]:
    """AXM for every context, INIT/INV/DLK/VAR for every machine, and
    refinement obligations for every (concrete, abstract) pair in the load
    set. GluingUnderspecified is reported on the concrete machine's report."""
    cfg = cfg or ExploreConfig()
    contexts = {d.name: d for d in defs if isinstance(d, ContextDef)}
    machines = {d.name: d for d in defs if isinstance(d, MachineDef)}
    reports: list[CheckReport] = []

    ctx_report = None
    for c in contexts.values():
        if not c.axioms or "AXM" not in cfg.checks:
            continue
        if ctx_report is None:
            ctx_report = CheckReport(machine=c.name)
        else:
            ctx_report.machine += f", {c.name}"
        ctx_report.obligations.extend(check_axioms(c, contexts))
    if ctx_report is not None:
        reports.append(ctx_report)

    for m in machines.values():
        if only_machines is not None and m.name not in only_machines:
            continue
        report = CheckReport(machine=m.name)
        try:
            cm = CompiledMachine(m, contexts=contexts)
        except SpecForgeError as exc:
            # e.g. the init section writes outside declared bounds; a finding,
            # not a crash
            report.errors.append(f"initialization: {exc}")
            reports.append(report)
            continue
        run = _explore_full(cm, cfg)
        report.states_explored = run.states
        report.transitions = len(run.transitions)
        report.bound_exhausted = run.exhausted
        if {"INV", "INIT"} & cfg.checks:
            obs = check_invariants(m, cfg, _run=run)
            report.obligations.extend(
                o for o in obs if o.kind in cfg.checks)
        if "DLK" in cfg.checks:
            report.obligations.append(check_deadlock(m, cfg, _run=run))
        if "VAR" in cfg.checks:
            report.obligations.extend(check_variant(m, cfg, _run=run))
        refinement_kinds = {"GRD_REF", "SIM_REF", "ENB"} & cfg.checks
        if m.refines and m.refines in machines and refinement_kinds:
            abstract = machines[m.refines]
            try:
                obs = check_refinement(
                    m, abstract, cfg,
                    ctx_abstract=machine_context(abstract, contexts),
                    _run=run)
                report.obligations.extend(
                    o for o in obs if o.kind in refinement_kinds)
            except GluingUnderspecifiedError as exc:
                report.errors.append(f"GluingUnderspecified: {exc}")
        reports.append(report)
    return reports


def overall_exit_code(reports: Sequence[CheckReport]) -> int:
    """0 all proved, 1 any violated (or refinement error), 2 bound-exhausted
    only."""
    worst = 0
    for r in reports:
        if r.worst == "violated":
            return 1
        if r.worst == "bound-exhausted":
            worst = 2
    return worst


# ---------------------------------------------------------------------------
# Report serialization


def counterexample_to_dict(cex: Counterexample) -> dict:
    return {
        "violated": cex.violated,
        "depth": cex.depth,
        "init": {n: format_value(v) for n, v in cex.init.items()},
        "steps": [
            {
                "event": name,
                "binding": {k: format_value(v) for k, v in binding.items()},
                "state": {n: format_value(v) for n, v in state.items()},
            }
            for name, binding, state in cex.steps
        ],
    }


def obligation_to_dict(o: Obligation) -> dict:
    d: dict = {"kind": o.kind, "subject": o.subject, "verdict": o.verdict}
    if o.message:
        d["message"] = o.message
    if o.counterexample is not None:
        d["depth"] = o.counterexample.depth
        d["trace"] = counterexample_to_dict(o.counterexample)
    return d


def report_to_dict(r: CheckReport) -> dict:
    d = {
        "machine": r.machine,
        "obligations": [obligation_to_dict(o) for o in r.obligations],
        "states_explored": r.states_explored,
        "bound_exhausted": r.bound_exhausted,
    }
    if r.errors:
        d["errors"] = list(r.errors)
    return d
