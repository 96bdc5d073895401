"""Translation of a deterministic-subset machine into self-contained C.

Subset: no event parameters; variables are ints, bools, symbols, or
single-maplet mappings (which lower to one enum variable); scheduling is
deterministic, either because at most one event is enabled in every reachable
state (verified by exploration) or because an explicit priority clause picks
the first enabled event.

The generated program runs a scheduler loop up to a step limit (first
command-line argument), printing one `step <n>: <event>` line per step
followed by one `  <var>=<value>` line per variable, and exits 0 on a normal
stop or 1 on deadlock. run_schedule() is the interpreter twin producing the
byte-identical trace, which the co-simulation tests compare against the
compiled program's output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .checker import CompiledMachine, ExploreConfig, _explore_full, _rich
from .errors import NotInSubsetError
from .evaluator import machine_context
from .kernel import (
    BoolType,
    ContextDef,
    Expr,
    IntType,
    IntV,
    BoolV,
    SymV,
    MachineDef,
    MapletType,
    SetType,
    SymType,
    TypeDesc,
    format_value,
)
from .parser import Diagnostic, SourceSpan


@dataclass(frozen=True)
class SubsetReport:
    eligible: bool
    violations: tuple

    def __post_init__(self):
        if self.eligible != (len(self.violations) == 0):
            raise ValueError("eligible iff violations empty")


def _span(m: MachineDef) -> SourceSpan:
    return m.span or SourceSpan("<machine>", 1, 1, 1, 1)


def _lowered(desc: TypeDesc, ctx: ContextDef) -> Optional[tuple[str, str]]:
    """(point symbol, value carrier) when desc is a single-maplet mapping."""
    if (isinstance(desc, SetType) and isinstance(desc.elem, MapletType)
            and isinstance(desc.elem.left, SymType)
            and isinstance(desc.elem.right, SymType)):
        members = ctx.sets.get(desc.elem.left.carrier, ())
        if len(members) == 1:
            return members[0], desc.elem.right.carrier
    return None


class _SubsetChecker:
    def __init__(self, m: MachineDef, ctx: ContextDef):
        self.m = m
        self.ctx = ctx
        self.violations: list[Diagnostic] = []
        self.lowered = {
            name: low for name, desc in m.variables.items()
            if (low := _lowered(desc, ctx)) is not None
        }

    def fail(self, msg: str):
        self.violations.append(Diagnostic("error", msg, _span(self.m)))

    def _is_singleton_literal(self, e: Expr, var: str) -> bool:
        """`{point |-> Symbol}` matching the lowered variable's shape."""
        point, carrier = self.lowered[var]
        if e.kind != "SetLit" or len(e.children) != 1:
            return False
        mp = e.children[0]
        if mp.kind != "Maplet":
            return False
        left, right = mp.children
        return (
            left.kind in ("SymbolRef", "VarRef") and left.payload == point
            and right.kind in ("SymbolRef", "VarRef")
            and self.ctx.symbol_carrier().get(right.payload) == carrier
        )

    def check_expr(self, e: Expr, where: str):
        k = e.kind
        if k in ("Eq", "Neq"):
            a, b = e.children
            for var_side, lit_side in ((a, b), (b, a)):
                if (var_side.kind == "VarRef" and var_side.payload in self.lowered):
                    other = lit_side
                    if other.kind == "VarRef" and other.payload in self.lowered:
                        return  # enum-to-enum comparison
                    if self._is_singleton_literal(other, var_side.payload):
                        return
                    self.fail(
                        f"{where}: mapping '{var_side.payload}' may only be "
                        f"compared with a single-maplet literal")
                    return
        if k in ("SetLit", "Maplet", "In"):
            self.fail(f"{where}: set/maplet expression not in the "
                      f"generatable subset")
            return
        if k == "VarRef" and e.payload in self.lowered:
            self.fail(f"{where}: mapping '{e.payload}' used outside a "
                      f"comparison with a single-maplet literal")
            return
        if k == "VarRef" and e.payload in self.ctx.constants:
            c = self.ctx.constants[e.payload]
            if not isinstance(c, (IntV, BoolV, SymV)):
                self.fail(f"{where}: constant '{e.payload}' is not scalar")
                return
        for c in e.children:
            self.check_expr(c, where)

    def check_assign(self, var: str, rhs: Expr, where: str):
        if var in self.lowered:
            if not self._is_singleton_literal(rhs, var):
                self.fail(
                    f"{where}: mapping '{var}' may only be assigned a "
                    f"single-maplet literal")
            return
        self.check_expr(rhs, where)


def check_subset(m: MachineDef, ctx: Optional[ContextDef] = None,
                 cfg: Optional[ExploreConfig] = None) -> SubsetReport:
    """Eligibility for code generation; determinism is verified by exploration
    unless an explicit priority order is declared."""
    ctx = ctx if ctx is not None else machine_context(m, {})
    sc = _SubsetChecker(m, ctx)
    for ev in m.events:
        if ev.params:
            sc.fail(f"event '{ev.name}': parameters are not in the subset")
    for name, desc in m.variables.items():
        if isinstance(desc, (IntType, BoolType, SymType)):
            continue
        if name in sc.lowered:
            continue
        sc.fail(f"variable '{name}': only ints, bools, symbols and "
                f"single-maplet mappings are in the subset")
    for a in m.init:
        sc.check_assign(a.var, a.expr, f"init '{a.label}'")
    for ev in m.events:
        for g in ev.guards:
            sc.check_expr(g.expr, f"guard '{g.label}' of '{ev.name}'")
        for a in ev.actions:
            sc.check_assign(a.var, a.expr, f"action '{a.label}' of '{ev.name}'")

    if not sc.violations:
        run = _explore_full(CompiledMachine(m, ctx=ctx), cfg or ExploreConfig())
        if run.bounds_faults:
            pre, ev, b, exc = run.bounds_faults[0]
            sc.fail(f"event '{ev.name}' can write out of bounds ({exc}); "
                    f"generated code does not check bounds")
        if not m.priority:
            for s, n in run.enabled_count.items():
                if n > 1:
                    sc.fail(
                        "more than one event enabled in a reachable state and "
                        "no priority order declared")
                    break
        if run.exhausted:
            sc.fail("state space exceeds the exploration bound; determinism "
                    "not verified")
    return SubsetReport(eligible=not sc.violations,
                        violations=tuple(sc.violations))


# ---------------------------------------------------------------------------
# C emission


def _c_ident(prefix: str, name: str) -> str:
    return f"{prefix}{name}"


class _CEmitter:
    def __init__(self, m: MachineDef, ctx: ContextDef):
        self.m = m
        self.ctx = ctx
        self.symbols = ctx.symbol_carrier()
        self.lowered = {
            name: low for name, desc in m.variables.items()
            if (low := _lowered(desc, ctx)) is not None
        }

    def c_type(self, desc: TypeDesc, var: str) -> str:
        if isinstance(desc, IntType):
            return "int"
        if isinstance(desc, BoolType):
            return "bool"
        if isinstance(desc, SymType):
            return _c_ident("T_", desc.carrier)
        return _c_ident("T_", self.lowered[var][1])

    def expr(self, e: Expr) -> str:
        k = e.kind
        if k == "IntLit":
            return str(e.payload)
        if k == "BoolLit":
            return "true" if e.payload else "false"
        if k == "SymbolRef":
            return _c_ident("S_", e.payload)
        if k == "VarRef":
            name = e.payload
            if name in self.m.variables:
                return _c_ident("v_", name)
            if name in self.ctx.constants:
                c = self.ctx.constants[name]
                if isinstance(c, IntV):
                    return str(c.value)
                if isinstance(c, BoolV):
                    return "true" if c.value else "false"
                return _c_ident("S_", c.name)
            return _c_ident("S_", name)  # bare symbol
        if k == "Not":
            return f"(!{self.expr(e.children[0])})"
        if k in ("Eq", "Neq"):
            a, b = e.children
            op = "==" if k == "Eq" else "!="
            for var_side, lit_side in ((a, b), (b, a)):
                if (var_side.kind == "VarRef"
                        and var_side.payload in self.lowered
                        and lit_side.kind == "SetLit"):
                    rhs_sym = lit_side.children[0].children[1].payload
                    return (f"({_c_ident('v_', var_side.payload)} {op} "
                            f"{_c_ident('S_', rhs_sym)})")
            return f"({self.expr(a)} {op} {self.expr(b)})"
        ops = {"And": "&&", "Or": "||", "Lt": "<", "Le": "<=", "Gt": ">",
               "Ge": ">=", "Add": "+", "Sub": "-", "Mul": "*"}
        if k == "Implies":
            a, b = e.children
            return f"((!{self.expr(a)}) || {self.expr(b)})"
        a, b = e.children
        return f"({self.expr(a)} {ops[k]} {self.expr(b)})"

    def assign_rhs(self, var: str, rhs: Expr) -> str:
        if var in self.lowered:
            return _c_ident("S_", rhs.children[0].children[1].payload)
        return self.expr(rhs)


def generate(m: MachineDef, ctx: Optional[ContextDef] = None,
             default_step_limit: int = 1000) -> str:
    """Emits a self-contained C program (hosted standard library only). The
    step limit is the program's first command-line argument, defaulting to
    `default_step_limit`."""
    ctx = ctx if ctx is not None else machine_context(m, {})
    report = check_subset(m, ctx)
    if not report.eligible:
        raise NotInSubsetError(m.name, report.violations)
    em = _CEmitter(m, ctx)
    out: list[str] = []
    w = out.append
    w(f"/* Generated from machine {m.name}; scheduler order: "
      f"{', '.join(m.scheduler_order())}. */")
    w("#include <stdio.h>")
    w("#include <stdlib.h>")
    w("#include <stdbool.h>")
    w("")
    printed_carriers = set()
    for name, desc in m.variables.items():
        if isinstance(desc, SymType):
            printed_carriers.add(desc.carrier)
        elif name in em.lowered:
            printed_carriers.add(em.lowered[name][1])
    for carrier, members in ctx.sets.items():
        enum_members = ", ".join(
            f"{_c_ident('S_', s)} = {i}" for i, s in enumerate(members))
        w(f"typedef enum {{ {enum_members} }} {_c_ident('T_', carrier)};")
        if carrier in printed_carriers:
            names = ", ".join(f'"{s}"' for s in members)
            w(f"static const char *const {_c_ident('N_', carrier)}[] = "
              f"{{ {names} }};")
    w("")
    for name, desc in m.variables.items():
        w(f"static {em.c_type(desc, name)} {_c_ident('v_', name)};")
    w("")
    w("static void print_state(void) {")
    for name, desc in m.variables.items():
        v = _c_ident("v_", name)
        if isinstance(desc, IntType):
            w(f'    printf("  {name}=%d\\n", {v});')
        elif isinstance(desc, BoolType):
            w(f'    printf("  {name}=%s\\n", {v} ? "true" : "false");')
        elif isinstance(desc, SymType):
            w(f'    printf("  {name}=%s\\n", {_c_ident("N_", desc.carrier)}[{v}]);')
        else:
            point, carrier = em.lowered[name]
            w(f'    printf("  {name}={{{point} |-> %s}}\\n", '
              f'{_c_ident("N_", carrier)}[{v}]);')
    w("}")
    w("")
    w("int main(int argc, char **argv) {")
    w(f"    long step_limit = {default_step_limit}L;")
    w("    if (argc > 1) step_limit = strtol(argv[1], NULL, 10);")
    for a in m.init:
        w(f"    {_c_ident('v_', a.var)} = {em.assign_rhs(a.var, a.expr)};")
    w("    for (long step = 1; step <= step_limit; ++step) {")
    first = True
    for name in m.scheduler_order():
        ev = m.event(name)
        guard = " && ".join(em.expr(g.expr) for g in ev.guards) or "true"
        kw = "if" if first else "} else if"
        first = False
        w(f"        {kw} ({guard}) {{")
        # temporaries preserve the parallel-assignment semantics
        for i, a in enumerate(ev.actions):
            ctype = em.c_type(m.variables[a.var], a.var)
            w(f"            {ctype} tmp{i} = {em.assign_rhs(a.var, a.expr)};")
        for i, a in enumerate(ev.actions):
            w(f"            {_c_ident('v_', a.var)} = tmp{i};")
        w(f'            printf("step %ld: {ev.name}\\n", step);')
    w("        } else {")
    w("            return 1; /* deadlock: no event enabled */")
    w("        }")
    w("        print_state();")
    w("    }")
    w("    return 0;")
    w("}")
    return "\n".join(out) + "\n"


def run_schedule(m: MachineDef, ctx: Optional[ContextDef] = None,
                 step_limit: int = 1000) -> tuple[str, bool]:
    """Interpreter twin of the generated scheduler: fires the first enabled
    event per priority order for up to step_limit steps. Returns (trace text,
    deadlocked flag)."""
    ctx = ctx if ctx is not None else machine_context(m, {})
    for ev in m.events:
        if ev.params:
            raise NotInSubsetError(m.name, [f"event '{ev.name}' has parameters"])
    cm = CompiledMachine(m, ctx=ctx)
    by_name = {ev.name: ev for ev in cm.events}
    order = [by_name[n] for n in m.scheduler_order()]
    s = cm.init_tuple
    lines: list[str] = []
    deadlocked = False
    for step in range(1, step_limit + 1):
        fired = None
        for ev in order:
            if (all(g(s, ()) for g in ev.free_guards)
                    and all(g(s, ()) for g in ev.bound_guards)):
                fired = ev
                break
        if fired is None:
            deadlocked = True
            break
        s = cm.fire_plain(s, fired, ())
        lines.append(f"step {step}: {fired.name}")
        for i, name in enumerate(cm.var_names):
            lines.append(
                f"  {name}="
                f"{format_value(_rich(s[i], cm.descs[i], cm.symbols))}")
    text = "\n".join(lines)
    return (text + "\n" if text else ""), deadlocked
