"""Core data model: expressions, values, states, and model definitions.

Everything here is immutable after construction and safe to share between
concurrent workers; the operations are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Union

from .errors import (
    BoundsViolationError,
    TypeMismatchError,
    UnknownVariableError,
)

# ---------------------------------------------------------------------------
# Expressions

# kind -> arity; None means variable arity (>= 0)
ARITY = {
    "IntLit": 0,
    "BoolLit": 0,
    "SymbolRef": 0,
    "VarRef": 0,
    "Not": 1,
    "And": 2,
    "Or": 2,
    "Implies": 2,
    "Eq": 2,
    "Neq": 2,
    "Lt": 2,
    "Le": 2,
    "Gt": 2,
    "Ge": 2,
    "Add": 2,
    "Sub": 2,
    "Mul": 2,
    "In": 2,
    "SetLit": None,
    "Maplet": 2,
}

IDENT_RE = r"[A-Za-z][A-Za-z0-9_]*"


def _is_ident(name: str) -> bool:
    import re

    return bool(re.fullmatch(IDENT_RE, name))


@dataclass(frozen=True)
class Expr:
    """AST node. `payload` holds the literal value (IntLit/BoolLit) or the
    identifier name (SymbolRef/VarRef); `span` is diagnostic-only and ignored
    by structural equality."""

    kind: str
    children: tuple["Expr", ...] = ()
    payload: Union[int, bool, str, None] = None
    span: Optional["object"] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        arity = ARITY.get(self.kind)
        if self.kind not in ARITY:
            raise ValueError(f"unknown expression kind {self.kind!r}")
        if arity is not None and len(self.children) != arity:
            raise ValueError(
                f"{self.kind} expects {arity} child(ren), got {len(self.children)}"
            )
        if self.kind in ("SymbolRef", "VarRef"):
            if not isinstance(self.payload, str) or not _is_ident(self.payload):
                raise ValueError(f"bad identifier payload {self.payload!r}")
        if self.kind == "IntLit" and not isinstance(self.payload, int):
            raise ValueError("IntLit payload must be int")
        if self.kind == "BoolLit" and not isinstance(self.payload, bool):
            raise ValueError("BoolLit payload must be bool")

    def walk(self) -> Iterable["Expr"]:
        yield self
        for c in self.children:
            yield from c.walk()


# constructor helpers, used heavily by the parser and tests
def e_int(v: int) -> Expr:
    return Expr("IntLit", payload=v)


def e_bool(v: bool) -> Expr:
    return Expr("BoolLit", payload=v)


def e_sym(name: str) -> Expr:
    return Expr("SymbolRef", payload=name)


def e_var(name: str) -> Expr:
    return Expr("VarRef", payload=name)


def e_not(a: Expr) -> Expr:
    return Expr("Not", (a,))


def e_bin(kind: str, a: Expr, b: Expr) -> Expr:
    return Expr(kind, (a, b))


def e_set(*elems: Expr) -> Expr:
    return Expr("SetLit", tuple(elems))


def e_maplet(a: Expr, b: Expr) -> Expr:
    return Expr("Maplet", (a, b))


def validate_arity(e: Expr) -> bool:
    """Validator walk over a tree; construction already enforces arity, this
    re-checks defensively (used by property tests on parser output)."""
    for node in e.walk():
        arity = ARITY[node.kind]
        if arity is not None and len(node.children) != arity:
            return False
        if node.kind in ("SymbolRef", "VarRef") and not _is_ident(node.payload):
            return False
    return True


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class IntV:
    value: int


@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class SymV:
    name: str
    carrier: str


@dataclass(frozen=True)
class MapletV:
    left: "Value"
    right: "Value"


@dataclass(frozen=True, init=False)
class SetV:
    elems: frozenset

    def __init__(self, elems: Iterable["Value"] = ()):
        object.__setattr__(self, "elems", frozenset(elems))


Value = Union[IntV, BoolV, SymV, SetV, MapletV]


def value_equal(a: Value, b: Value) -> bool:
    """Structural equality; SetV comparison is order-insensitive. Values of
    different kinds compare unequal, never error."""
    return a == b


def _value_sort_key(v: Value):
    if isinstance(v, IntV):
        return (0, v.value)
    if isinstance(v, BoolV):
        return (1, v.value)
    if isinstance(v, SymV):
        return (2, v.name)
    if isinstance(v, MapletV):
        return (3, _value_sort_key(v.left), _value_sort_key(v.right))
    return (4, tuple(sorted(_value_sort_key(e) for e in v.elems)))


def format_value(v: Value) -> str:
    """Canonical printed form, shared by the pretty-printer, checker reports,
    the animator protocol, and generated-code traces."""
    if isinstance(v, IntV):
        return str(v.value)
    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if isinstance(v, SymV):
        return v.name
    if isinstance(v, MapletV):
        return f"{format_value(v.left)} |-> {format_value(v.right)}"
    elems = sorted(v.elems, key=_value_sort_key)
    return "{" + ", ".join(format_value(e) for e in elems) + "}"


# ---------------------------------------------------------------------------
# Type descriptors (all domains are finite, a requirement of explicit-state
# checking)


@dataclass(frozen=True)
class IntType:
    lo: int
    hi: int  # inclusive

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty integer range {self.lo}..{self.hi}")


@dataclass(frozen=True)
class BoolType:
    pass


@dataclass(frozen=True)
class SymType:
    carrier: str


@dataclass(frozen=True)
class SetType:
    elem: "TypeDesc"


@dataclass(frozen=True)
class MapletType:
    left: "TypeDesc"
    right: "TypeDesc"


TypeDesc = Union[IntType, BoolType, SymType, SetType, MapletType]


def format_type(t: TypeDesc) -> str:
    if isinstance(t, IntType):
        return f"bounds {t.lo} {t.hi}"
    if isinstance(t, BoolType):
        return "bool"
    if isinstance(t, SymType):
        return t.carrier
    if isinstance(t, SetType):
        return "{ " + format_type(t.elem) + " }"
    return f"{format_type(t.left)} |-> {format_type(t.right)}"


def value_matches(v: Value, t: TypeDesc) -> bool:
    """Kind/carrier conformance, ignoring integer bounds (checked separately
    so the error can name the offending bound)."""
    if isinstance(t, IntType):
        return isinstance(v, IntV)
    if isinstance(t, BoolType):
        return isinstance(v, BoolV)
    if isinstance(t, SymType):
        return isinstance(v, SymV) and v.carrier == t.carrier
    if isinstance(t, SetType):
        return isinstance(v, SetV) and all(value_matches(e, t.elem) for e in v.elems)
    return (
        isinstance(v, MapletV)
        and value_matches(v.left, t.left)
        and value_matches(v.right, t.right)
    )


# ---------------------------------------------------------------------------
# States


class State(Mapping):
    """Immutable mapping from variable name to Value, tied to the declaring
    machine's variable schema. Domain must equal the schema exactly; integer
    values must lie within their declared bounds."""

    __slots__ = ("_vars", "_schema", "_hash")

    def __init__(self, values: Mapping[str, Value], schema: Mapping[str, TypeDesc]):
        extra = set(values) - set(schema)
        if extra:
            raise UnknownVariableError(sorted(extra)[0])
        missing = set(schema) - set(values)
        if missing:
            raise UnknownVariableError(sorted(missing)[0])
        for name, desc in schema.items():
            v = values[name]
            if not value_matches(v, desc):
                raise TypeMismatchError(
                    f"'{name}' expects {format_type(desc)}, got {format_value(v)}"
                )
            if isinstance(desc, IntType) and not (desc.lo <= v.value <= desc.hi):
                raise BoundsViolationError(name, v.value, desc.lo, desc.hi)
        self._vars = dict(values)
        self._schema = schema
        self._hash = None

    @property
    def schema(self) -> Mapping[str, TypeDesc]:
        return self._schema

    def __getitem__(self, name: str) -> Value:
        try:
            return self._vars[name]
        except KeyError:
            raise UnknownVariableError(name) from None

    def __contains__(self, name) -> bool:
        return name in self._vars

    def __iter__(self):
        return iter(self._vars)

    def __len__(self):
        return len(self._vars)

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self._vars == other._vars

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(sorted(self._vars.items(), key=lambda kv: kv[0])))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={format_value(v)}" for k, v in sorted(self._vars.items()))
        return f"State({inner})"


def state_update(s: State, assignments: Iterable[tuple[str, Value]]) -> State:
    """Parallel assignment: returns a new State equal to `s` except the listed
    variables; `s` is unchanged. Callers evaluate all right-hand sides against
    the pre-state before calling."""
    new_vars = dict(s)
    for name, v in assignments:
        if name not in s.schema:
            raise UnknownVariableError(name)
        desc = s.schema[name]
        if not value_matches(v, desc):
            raise TypeMismatchError(
                f"'{name}' expects {format_type(desc)}, got {format_value(v)}"
            )
        if isinstance(desc, IntType) and not (desc.lo <= v.value <= desc.hi):
            raise BoundsViolationError(name, v.value, desc.lo, desc.hi)
        new_vars[name] = v
    return State(new_vars, s.schema)


# ---------------------------------------------------------------------------
# Model definitions


class Labeled(NamedTuple):
    label: str
    expr: Expr


class Assign(NamedTuple):
    label: str
    var: str
    expr: Expr


@dataclass(frozen=True)
class ContextDef:
    """Static half of a model: carrier sets, constants, axioms."""

    name: str
    sets: Mapping[str, tuple[str, ...]]  # carrier name -> symbol names
    constants: Mapping[str, Value]
    axioms: tuple[Labeled, ...] = ()
    extends: Optional[str] = None
    span: Optional[object] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        seen = {}
        for carrier, members in self.sets.items():
            for m in members:
                if m in seen:
                    raise ValueError(
                        f"symbol '{m}' declared in both '{seen[m]}' and '{carrier}'"
                    )
                seen[m] = carrier

    def symbol_carrier(self) -> dict[str, str]:
        return {m: c for c, ms in self.sets.items() for m in ms}


@dataclass(frozen=True)
class EventDef:
    name: str
    status: str = "ordinary"  # ordinary | convergent
    refines: Optional[str] = None
    params: Mapping[str, TypeDesc] = field(default_factory=dict)
    guards: tuple[Labeled, ...] = ()
    actions: tuple[Assign, ...] = ()
    span: Optional[object] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.status not in ("ordinary", "convergent"):
            raise ValueError(f"bad event status {self.status!r}")
        assigned = [a.var for a in self.actions]
        for var in assigned:
            if assigned.count(var) > 1:
                raise ValueError(
                    f"event '{self.name}' assigns '{var}' more than once"
                )


@dataclass(frozen=True)
class MachineDef:
    """Dynamic half of a model. `variables` preserves declaration order, which
    fixes state printing, exploration order, and generated-code layout."""

    name: str
    sees: tuple[str, ...] = ()
    refines: Optional[str] = None
    variables: Mapping[str, TypeDesc] = field(default_factory=dict)
    invariants: tuple[Labeled, ...] = ()
    gluing: tuple[Labeled, ...] = ()
    variant: Optional[Expr] = None
    init: tuple[Assign, ...] = ()
    events: tuple[EventDef, ...] = ()
    priority: tuple[str, ...] = ()  # explicit scheduler order for codegen
    span: Optional[object] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        names = [e.name for e in self.events]
        for n in names:
            if names.count(n) > 1:
                raise ValueError(f"duplicate event '{n}' in machine '{self.name}'")
        labels = [l.label for l in self.invariants]
        for l in labels:
            if labels.count(l) > 1:
                raise ValueError(f"duplicate invariant label '{l}'")
        if self.gluing and self.refines is None:
            raise ValueError("gluing invariants require a refines clause")

    def event(self, name: str) -> EventDef:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    def scheduler_order(self) -> tuple[str, ...]:
        """Priority order: the explicit priority clause first, then remaining
        events in declaration order."""
        listed = list(self.priority)
        rest = [e.name for e in self.events if e.name not in self.priority]
        return tuple(listed + rest)


ABSTRACT_PREFIX = "abs_"
