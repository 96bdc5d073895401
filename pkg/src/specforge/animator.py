"""Interactive validation: step a machine by firing chosen enabled events,
with undo, plus scripted scenarios (`.scn` files).

Sessions are immutable; each operation returns a new Session whose trace
replays from the initial state to the current one. The HTTP face of the
animator lives in service.py.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Union

from .errors import EmptyTraceError
from .evaluator import (
    EnabledEvent,
    enabled_events,
    eval_expr,
    fire_event,
    initial_state,
    invariant_flags,
)
from .kernel import ContextDef, Expr, MachineDef, State, Value, format_value
from .parser import (
    Diagnostic,
    ParseError,
    SourceSpan,
    parse_expression,
)


@dataclass(frozen=True)
class Session:
    machine: MachineDef
    ctx: ContextDef
    current: State
    trace: tuple = ()  # of (EnabledEvent, resulting State)
    init_violations: tuple = ()  # invariant labels false at the initial state
    scenario_log: tuple = ()  # ScenarioReports run during this session

    @property
    def trace_len(self) -> int:
        return len(self.trace)

    def enabled(self) -> list[EnabledEvent]:
        return enabled_events(self.machine, self.current, self.ctx)

    def flags(self) -> dict[str, bool]:
        return invariant_flags(self.machine, self.current, self.ctx)

    def alarm(self) -> Optional[str]:
        # the corpus convention: a variable literally named `alarm`
        if "alarm" in self.current:
            return format_value(self.current["alarm"])
        return None


def session_start(m: MachineDef, ctx: Optional[ContextDef] = None) -> Session:
    """Opens a session at the unique initial state. An initial state that
    violates invariants still opens, flagged via init_violations."""
    s0 = initial_state(m, ctx)
    flags = invariant_flags(m, s0, ctx)
    bad = tuple(label for label, ok in flags.items() if not ok)
    return Session(machine=m, ctx=ctx, current=s0, trace=(),
                   init_violations=bad)


def session_fire(sess: Session, event: str,
                 binding: Optional[Mapping[str, Value]] = None) -> Session:
    """Advances the session by one event; raises EventNotEnabledError (leaving
    the session unchanged) if the guards do not hold under the binding."""
    ev = EnabledEvent(event, dict(binding or {}))
    nxt = fire_event(sess.machine, sess.current, ev, sess.ctx)
    return replace(sess, current=nxt, trace=sess.trace + ((ev, nxt),))


def session_undo(sess: Session) -> Session:
    """Removes the last step; the new current state is the replay of the
    remaining trace."""
    if not sess.trace:
        raise EmptyTraceError("nothing to undo")
    trace = sess.trace[:-1]
    cur = trace[-1][1] if trace else initial_state(sess.machine, sess.ctx)
    return replace(sess, current=cur, trace=trace)


def session_log_scenario(sess: Session, report: "ScenarioReport") -> Session:
    return replace(sess, scenario_log=sess.scenario_log + (report,))


def session_replay(sess: Session) -> State:
    """Replays the trace from the initial state (used to validate that a
    session's current state is reproducible)."""
    s = initial_state(sess.machine, sess.ctx)
    for ev, _ in sess.trace:
        s = fire_event(sess.machine, s, ev, sess.ctx)
    return s


# ---------------------------------------------------------------------------
# Scenarios


@dataclass(frozen=True)
class FireStep:
    event: str
    binding_exprs: Mapping[str, Expr]
    line: int


@dataclass(frozen=True)
class AssertStep:
    label: str
    expr: Expr
    line: int


Step = Union[FireStep, AssertStep]


@dataclass(frozen=True)
class Scenario:
    name: str
    steps: tuple = ()


@dataclass(frozen=True)
class ScenarioReport:
    name: str
    passed: bool
    steps_run: int
    failed_step: Optional[int] = None  # 1-based index of the failing step
    reason: str = ""

    def describe(self) -> str:
        if self.passed:
            return f"scenario '{self.name}': pass ({self.steps_run} steps)"
        return (f"scenario '{self.name}': FAIL at step {self.failed_step}: "
                f"{self.reason}")


def parse_scenario(text: str, name: str,
                   file_name: str = "<scenario>") -> Scenario:
    """One step per line: `fire eventName [param=value ...]` or
    `assert label: <expression>`. Raises ParseError on malformed input."""
    steps: list[Step] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        span = SourceSpan(file_name, lineno, 1, lineno, max(2, len(raw)))
        if line.startswith("fire"):
            parts = line.split()
            if len(parts) < 2:
                raise ParseError(Diagnostic(
                    "error", "fire requires an event name", span))
            binding: dict[str, Expr] = {}
            for chunk in parts[2:]:
                if "=" not in chunk:
                    raise ParseError(Diagnostic(
                        "error", f"expected param=value, found '{chunk}'", span))
                pname, _, vtext = chunk.partition("=")
                binding[pname] = parse_expression(vtext, file_name)
            steps.append(FireStep(parts[1], binding, lineno))
        elif line.startswith("assert"):
            rest = line[len("assert"):].strip()
            label, sep, expr_text = rest.partition(":")
            if not sep or not label.strip():
                raise ParseError(Diagnostic(
                    "error", "assert requires 'label: expression'", span))
            steps.append(AssertStep(label.strip(),
                                    parse_expression(expr_text, file_name),
                                    lineno))
        else:
            raise ParseError(Diagnostic(
                "error", f"expected 'fire' or 'assert', found '{line.split()[0]}'",
                span))
    return Scenario(name=name, steps=tuple(steps))


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.stem,
                          str(path))


def scenario_run(m: MachineDef, sc: Scenario,
                 ctx: Optional[ContextDef] = None) -> ScenarioReport:
    """Executes the steps in order; the first failure stops the run with its
    1-based step index. Failures are reported in-band, never thrown."""
    sess = session_start(m, ctx)
    for idx, step in enumerate(sc.steps, start=1):
        if isinstance(step, FireStep):
            try:
                binding = {
                    n: eval_expr(e, None, None, ctx)
                    for n, e in step.binding_exprs.items()
                }
                sess = session_fire(sess, step.event, binding)
            except Exception as exc:
                return ScenarioReport(sc.name, False, idx - 1, idx,
                                      f"fire {step.event}: {exc}")
        else:
            try:
                v = eval_expr(step.expr, sess.current, None, ctx)
                holds = bool(getattr(v, "value", False))
            except Exception as exc:
                return ScenarioReport(sc.name, False, idx - 1, idx,
                                      f"assert {step.label}: {exc}")
            if not holds:
                return ScenarioReport(sc.name, False, idx - 1, idx,
                                      f"assertion '{step.label}' is false")
    return ScenarioReport(sc.name, True, len(sc.steps))
