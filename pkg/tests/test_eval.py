import itertools

import pytest

from specforge.errors import EvalTypeError, EventNotEnabledError, UnboundNameError
from specforge.evaluator import (
    EnabledEvent,
    enabled_events,
    enumerate_type,
    eval_expr,
    fire_event,
    initial_state,
    type_check,
)
from specforge.kernel import (
    BoolV,
    IntType,
    IntV,
    SetType,
    SetV,
    State,
    SymV,
    value_equal,
)
from specforge.loader import load_source
from specforge.parser import parse_expression

INV2 = ("softwareMode = Therapy & dialysateTemperature > 41 => "
        "dialyserState = {Dialysate |-> DialyserDisconnected} & "
        "dialyserDisconnectionTime < 60 & alarm = ALM639")


@pytest.fixture(scope="module")
def r2(cache):
    return cache.machine("R2"), cache.ctx("R2")


def _r2_state(m, ctx, **over):
    vals = {
        "softwareMode": SymV("Preparation", "MODE"),
        "operation": SymV("None", "OPERATION"),
        "dialysateTemperature": IntV(37),
        "dialyserState": SetV([
            __import__("specforge.kernel", fromlist=["MapletV"]).MapletV(
                SymV("Dialysate", "POINT"), SymV("DialyserConnected", "DIALYSER"))
        ]),
        "alarm": SymV("NoAlarm", "ALARM"),
        "dialyserDisconnectionTime": IntV(0),
    }
    vals.update(over)
    return State(vals, m.variables)


def test_inv2_false_in_pending_overtemp_therapy_state(r2):
    m, ctx = r2
    s = _r2_state(m, ctx,
                  softwareMode=SymV("Therapy", "MODE"),
                  dialysateTemperature=IntV(42))
    e = parse_expression(INV2)
    assert eval_expr(e, s, None, ctx) == BoolV(False)


def test_strict_comparison_boundary(r2):
    m, ctx = r2
    assert eval_expr(parse_expression("41 > 41"), None, None, ctx) == BoolV(False)
    assert eval_expr(parse_expression("42 > 41"), None, None, ctx) == BoolV(True)


def test_implies_truth_table(r2):
    _, ctx = r2
    for a, b in itertools.product([False, True], repeat=2):
        lhs = "true" if a else "false"
        rhs = "true" if b else "false"
        got = eval_expr(parse_expression(f"{lhs} => {rhs}"), None, None, ctx)
        assert got == BoolV((not a) or b)


def test_short_circuit_guards_ill_typed_right_side(r2):
    _, ctx = r2
    # right side would be a type error if evaluated
    e = parse_expression("false & (1 > true)")
    assert eval_expr(e, None, None, ctx) == BoolV(False)
    with pytest.raises(EvalTypeError):
        eval_expr(parse_expression("true & (1 > true)"), None, None, ctx)


def test_in_uses_structural_equality(r2):
    _, ctx = r2
    e = parse_expression("{1, 2} in {{2, 1}, {3}}")
    assert eval_expr(e, None, None, ctx) == BoolV(True)


def test_unbound_name(r2):
    _, ctx = r2
    with pytest.raises(UnboundNameError):
        eval_expr(parse_expression("mystery = 1"), None, None, ctx)


# ---------------------------------------------------------------------------
# type_check


def test_corpus_r2_type_checks_clean(cache):
    diags = type_check(cache.model("R2").defs)
    assert [d for d in diags if d.severity == "error"] == []


def test_type_check_rejects_int_symbol_comparison():
    model = load_source("""
context C sets S = { A, B } end
machine M sees C
  variables x : bounds 0 5
  invariants bad: x < 3
  init a1: x := 0
  events
    event e where g1: x > A then a1: x := 1 end
end
""")
    diags = type_check(model.defs)
    assert any("integers" in d.message for d in diags)


def test_type_check_rejects_undeclared_assignment():
    model = load_source("""
machine M
  variables x : bounds 0 5
  init a1: x := 0
  events
    event e then a1: ghost := 1 end
end
""")
    diags = type_check(model.defs)
    assert any("undeclared variable 'ghost'" in d.message for d in diags)


def test_type_check_requires_variant_for_convergent():
    model = load_source("""
machine M
  variables x : bounds 0 5
  init a1: x := 0
  events
    event e convergent where g1: x > 0 then a1: x := 0 end
end
""")
    diags = type_check(model.defs)
    assert any("variant" in d.message for d in diags)


def test_type_check_requires_total_init():
    model = load_source("""
machine M
  variables x : bounds 0 5 y : bounds 0 5
  init a1: x := 0
  events end
""")
    diags = type_check(model.defs)
    assert any("does not assign variable 'y'" in d.message for d in diags)


# ---------------------------------------------------------------------------
# enabled_events / fire_event


def test_fig3_guard_enables_disconnect(r2):
    m, ctx = r2
    s = _r2_state(m, ctx,
                  operation=SymV("Priming", "OPERATION"),
                  dialysateTemperature=IntV(42),
                  dialyserDisconnectionTime=IntV(5))
    names = {e.event for e in enabled_events(m, s, ctx)}
    assert "disconnectDialyserPreparation" in names


def test_boundary_temperature_disables_disconnect(r2):
    m, ctx = r2
    s = _r2_state(m, ctx,
                  operation=SymV("Priming", "OPERATION"),
                  dialysateTemperature=IntV(41),
                  dialyserDisconnectionTime=IntV(5))
    names = {e.event for e in enabled_events(m, s, ctx)}
    assert "disconnectDialyserPreparation" not in names


def test_no_events_machine_enables_nothing():
    model = load_source("machine M variables x : bounds 0 1 init a1: x := 0 events end")
    m = model.machine("M")
    assert enabled_events(m, initial_state(m)) == []


def test_enabled_events_deterministic_order(r2):
    m, ctx = r2
    s = initial_state(m, ctx)
    a = enabled_events(m, s, ctx)
    b = enabled_events(m, s, ctx)
    assert a == b
    # declaration order first, then binding order
    names = [e.event for e in a]
    assert names.index("monitor") < names.index("selectOperation")
    ops = [e.binding["op"].name for e in a if e.event == "selectOperation"]
    assert ops == ["Priming", "Rinsing", "None"]


def test_enabled_matches_guard_truth(r2):
    m, ctx = r2
    s = _r2_state(m, ctx, dialysateTemperature=IntV(43))
    enabled = {(e.event, tuple(sorted((k, v) for k, v in e.binding.items())))
               for e in enabled_events(m, s, ctx)}
    for ev in m.events:
        names = list(ev.params)
        domains = [enumerate_type(t, ctx) for t in ev.params.values()]
        for combo in itertools.product(*domains):
            binding = dict(zip(names, combo))
            truth = all(
                eval_expr(g.expr, s, binding, ctx).value for g in ev.guards)
            key = (ev.name, tuple(sorted(binding.items())))
            assert (key in enabled) == truth


def test_fire_fig3_then_block(r2):
    m, ctx = r2
    s = _r2_state(m, ctx,
                  operation=SymV("Rinsing", "OPERATION"),
                  dialysateTemperature=IntV(44),
                  dialyserDisconnectionTime=IntV(17))
    s2 = fire_event(m, s, EnabledEvent("disconnectDialyserPreparation", {}), ctx)
    assert s2["alarm"] == SymV("ALM377", "ALARM")
    assert s2["dialyserDisconnectionTime"] == IntV(0)
    assert "DialyserDisconnected" in str(s2["dialyserState"])
    # frame property: untouched variables unchanged
    assert s2["softwareMode"] == s["softwareMode"]
    assert s2["operation"] == s["operation"]
    assert s2["dialysateTemperature"] == s["dialysateTemperature"]


def test_fire_tick_increments_by_one(r2):
    m, ctx = r2
    s = _r2_state(m, ctx, dialysateTemperature=IntV(42),
                  dialyserDisconnectionTime=IntV(7))
    s2 = fire_event(m, s, EnabledEvent("tick", {}), ctx)
    assert s2["dialyserDisconnectionTime"] == IntV(8)


def test_fire_empty_then_block_is_identity(r2):
    m, ctx = r2
    s = initial_state(m, ctx)
    s2 = fire_event(m, s, EnabledEvent("monitor", {}), ctx)
    assert s2 == s


def test_fire_disabled_event_raises(r2):
    m, ctx = r2
    s = initial_state(m, ctx)  # temp 37: tick disabled
    with pytest.raises(EventNotEnabledError):
        fire_event(m, s, EnabledEvent("tick", {}), ctx)
    with pytest.raises(EventNotEnabledError):
        fire_event(m, s, EnabledEvent("doesNotExist", {}), ctx)


def test_fire_deterministic(r2):
    m, ctx = r2
    s = initial_state(m, ctx)
    ev = EnabledEvent("setTemperature", {"t": IntV(42)})
    assert fire_event(m, s, ev, ctx) == fire_event(m, s, ev, ctx)


def test_initial_state_unique(r2):
    m, ctx = r2
    assert initial_state(m, ctx) == initial_state(m, ctx)
    assert initial_state(m, ctx)["dialyserDisconnectionTime"] == IntV(0)


def test_enumerate_set_type_is_powerset(r2):
    _, ctx = r2
    desc = SetType(IntType(1, 3))
    vals = enumerate_type(desc, ctx)
    assert len(vals) == 8
    assert any(value_equal(v, SetV([])) for v in vals)
    assert any(value_equal(v, SetV([IntV(1), IntV(2), IntV(3)])) for v in vals)
