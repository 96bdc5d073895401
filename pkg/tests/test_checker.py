import pytest

from specforge.checker import (
    ExploreConfig,
    check_deadlock,
    check_invariants,
    check_refinement,
    check_variant,
    explore,
    overall_exit_code,
    report_to_dict,
    run_checks,
)
from specforge.errors import GluingUnderspecifiedError, MissingVariantError
from specforge.evaluator import EnabledEvent, fire_event, initial_state
from specforge.kernel import IntV, format_value
from specforge.loader import load_source

from conftest import obligations_of

# golden reachable counts, frozen from the independent oracle
GOLDEN_STATES = {"R0": 7, "R1": 192, "R2": 6800, "R2-det": 254}


@pytest.mark.parametrize("entry_id", ["R0", "R1", "R2", "R2-det"])
def test_explore_matches_oracle_exactly(cache, entry_id):
    m, ctx = cache.machine(entry_id), cache.ctx(entry_id)
    states, ntrans, exhausted = explore(m, ExploreConfig(), ctx)
    assert not exhausted
    assert len(states) == GOLDEN_STATES[entry_id]
    assert states == cache.oracle_set(entry_id)  # set equality, not cardinality


def test_explore_false_guard_reaches_only_init():
    model = load_source("""
machine M
  variables x : bounds 0 9
  init a1: x := 0
  events
    event never where g1: x > 5 then a1: x := 0 end
end
""")
    m = model.machine("M")
    states, ntrans, exhausted = explore(m)
    assert len(states) == 1 and ntrans == 0 and not exhausted


def test_explore_respects_max_states(cache):
    m, ctx = cache.machine("R2"), cache.ctx("R2")
    states, _, exhausted = explore(m, ExploreConfig(max_states=100), ctx)
    assert exhausted and len(states) <= 100


# ---------------------------------------------------------------------------
# invariants


def test_corpus_invariants_all_proved(cache):
    for entry_id in ("R0", "R1", "R2", "R2-det"):
        reports = cache.reports(entry_id)
        for o in obligations_of(reports, kind="INV"):
            assert o.verdict == "proved", (entry_id, o.subject)
        for o in obligations_of(reports, kind="INIT"):
            assert o.verdict == "proved"


def test_tautology_invariant_proved():
    model = load_source("""
machine M
  variables x : bounds 0 3
  invariants taut: 1 = 1
  init a1: x := 0
  events
    event step where g1: x < 3 then a1: x := x + 1 end
end
""")
    m = model.machine("M")
    obs = check_invariants(m)
    assert all(o.verdict == "proved" for o in obs)


def test_mut_tick_deadline_counterexample(cache):
    reports = cache.reports("MUT-TICK")
    (viol,) = [o for o in obligations_of(reports, kind="INV", machine="R2")
               if o.subject == "inv_deadline"]
    assert viol.verdict == "violated"
    cex = viol.counterexample
    final = cex.final_state()
    assert final["dialysateTemperature"].value > 41
    assert "DialyserConnected" in format_value(final["dialyserState"])
    assert final["dialyserDisconnectionTime"] == IntV(60)
    assert cex.depth == 61
    # lexicographic tie-break: first step raises the temperature to 42
    assert cex.steps[0][0] == "setTemperature"
    assert cex.steps[0][1]["t"] == IntV(42)
    assert all(s[0] == "tick" for s in cex.steps[1:])


def test_mut_tick_counterexample_is_bfs_minimal(cache):
    # independent depth-(d-1) exhaustive search: no state within 60 steps
    # violates the deadline invariant
    m = cache.machine("MUT-TICK")
    inv = {l.label: l.expr for l in m.invariants}["inv_deadline"]
    o = cache.oracle("MUT-TICK")
    levels = o.levels(60)
    for level in levels:
        for s in level:
            assert o.eval(inv, s, None).value


def test_counterexample_replays_through_fire_event(cache):
    reports = cache.reports("MUT-TICK")
    (viol,) = [o for o in obligations_of(reports, kind="INV", machine="R2")
               if o.subject == "inv_deadline"]
    cex = viol.counterexample
    m, ctx = cache.machine("MUT-TICK"), cache.ctx("MUT-TICK")
    s = initial_state(m, ctx)
    assert s == cex.init
    for name, binding, after in cex.steps:
        s = fire_event(m, s, EnabledEvent(name, binding), ctx)
        assert s == after
    assert s == cex.final_state()


def test_bounds_violation_is_a_finding_not_a_crash(cache):
    reports = cache.reports("MUT-TICK")
    findings = [o for o in obligations_of(reports, kind="INV", machine="R2")
                if o.subject.startswith("bounds(")]
    assert findings and findings[0].verdict == "violated"
    assert "dialyserDisconnectionTime" in findings[0].subject


def test_monotone_bounds_never_flip_violated_to_proved(cache):
    m, ctx = cache.machine("MUT-TICK"), cache.ctx("MUT-TICK")
    verdicts = []
    for max_states in (50, 500, 5000, 50000):
        obs = check_invariants(m, ExploreConfig(max_states=max_states), ctx)
        by_subject = {o.subject: o.verdict for o in obs}
        verdicts.append(by_subject["inv_deadline"])
    seen_violated = False
    for v in verdicts:
        if v == "violated":
            seen_violated = True
        assert not (seen_violated and v == "proved")
    assert verdicts[-1] == "violated"


# ---------------------------------------------------------------------------
# deadlock


def test_corpus_deadlock_free(cache):
    for entry_id in ("R0", "R1", "R2", "R2-det"):
        for o in obligations_of(cache.reports(entry_id), kind="DLK"):
            assert o.verdict == "proved", entry_id


def test_no_events_machine_deadlocks_at_depth_zero():
    model = load_source(
        "machine M variables x : bounds 0 1 init a1: x := 0 events end")
    ob = check_deadlock(model.machine("M"))
    assert ob.verdict == "violated"
    assert ob.counterexample.depth == 0


def test_mut_dlk_trace_ends_in_ending_mode(cache):
    reports = cache.reports("MUT-DLK")
    (dlk,) = [o for o in obligations_of(reports, kind="DLK", machine="R2")]
    assert dlk.verdict == "violated"
    final = dlk.counterexample.final_state()
    assert format_value(final["softwareMode"]) == "Ending"
    assert dlk.counterexample.depth == 3
    # confirmed by the oracle: that state really has no successors
    o = cache.oracle("MUT-DLK")
    assert o.successors(final) == []


# ---------------------------------------------------------------------------
# variant


def test_decreasing_counter_variant_proved():
    model = load_source("""
machine M
  variables c : bounds 0 5
  variant c
  init a1: c := 5
  events
    event down convergent where g1: c > 0 then a1: c := c - 1 end
    event up where g1: c = 0 then a1: c := 5 end
end
""")
    (ob,) = check_variant(model.machine("M"))
    assert (ob.subject, ob.verdict) == ("down", "proved")


def test_non_decreasing_variant_violated():
    model = load_source("""
machine M
  variables c : bounds 0 5
  variant c
  init a1: c := 5
  events
    event stall convergent where g1: c > 0 then a1: c := c end
end
""")
    (ob,) = check_variant(model.machine("M"))
    assert ob.verdict == "violated"
    assert ob.counterexample.depth == 1  # violated on the first transition


def test_missing_variant_raises():
    model = load_source("""
machine M
  variables c : bounds 0 5
  init a1: c := 5
  events
    event down convergent where g1: c > 0 then a1: c := c - 1 end
end
""")
    with pytest.raises(MissingVariantError):
        check_variant(model.machine("M"))


def test_r2_watchdog_consolidation_variant_proved(cache):
    (ob,) = obligations_of(cache.reports("R2"), kind="VAR", machine="R2")
    assert (ob.subject, ob.verdict) == ("resetWatchdog", "proved")
    # oracle replay: the variant strictly decreases on every reachable firing
    o = cache.oracle("R2")
    m = cache.machine("R2")
    fired = 0
    for s in o.reachable():
        for name, env, nxt in o.successors(s):
            if name == "resetWatchdog":
                fired += 1
                before = s["dialyserDisconnectionTime"].value
                after = nxt["dialyserDisconnectionTime"].value
                assert before >= 0 and after < before
    assert fired > 0


# ---------------------------------------------------------------------------
# refinement


def test_r2_refines_r1_all_proved(cache):
    reports = cache.reports("R2")
    kinds = {"GRD_REF", "SIM_REF", "ENB"}
    obs = [o for o in obligations_of(reports, machine="R2")
           if o.kind in kinds]
    assert obs
    assert all(o.verdict == "proved" for o in obs)


def test_refinement_requires_matching_declaration(cache):
    with pytest.raises(ValueError):
        check_refinement(cache.machine("R1"), cache.machine("R2"))


def test_mut_glue_reports_underspecified(cache):
    m = cache.machine("MUT-GLUE")
    model = cache.model("MUT-GLUE")
    abstract = model.machine("R1")
    with pytest.raises(GluingUnderspecifiedError):
        check_refinement(m, abstract, ExploreConfig(),
                         ctx_concrete=cache.ctx("MUT-GLUE"),
                         ctx_abstract=model.context_of(abstract))
    reports = cache.reports("MUT-GLUE")
    assert any("GluingUnderspecified" in e for r in reports for e in r.errors)


def test_mut_sim_two_state_witness(cache):
    reports = cache.reports("MUT-SIM")
    (sim,) = [o for o in obligations_of(reports, kind="SIM_REF", machine="R2")
              if o.verdict == "violated"]
    assert sim.subject == "disconnectDialyserPreparation"
    cex = sim.counterexample
    # the witness is the offending transition: pre-state at depth-1, post at depth
    assert cex.depth == 3
    assert cex.steps[-1][0] == "disconnectDialyserPreparation"
    assert format_value(cex.final_state()["alarm"]) == "ALM639"
    assert "ALM377" in sim.message and "ALM639" in sim.message


def test_mutant_kill_completeness(cache, corpus):
    entries, _ = corpus
    for entry_id in ("MUT-TICK", "MUT-DLK", "MUT-SIM", "MUT-GLUE"):
        reports = cache.reports(entry_id)
        violated = [o for r in reports for o in r.obligations
                    if o.verdict == "violated"]
        errors = [e for r in reports for e in r.errors]
        assert violated or errors, entry_id
    for entry_id in ("R0", "R1", "R2", "R2-det"):
        reports = cache.reports(entry_id)
        assert all(o.verdict == "proved"
                   for r in reports for o in r.obligations), entry_id
        assert not any(r.errors for r in reports)


# ---------------------------------------------------------------------------
# report plumbing


def test_exit_codes(cache):
    assert overall_exit_code(cache.reports("R2")) == 0
    assert overall_exit_code(cache.reports("MUT-TICK")) == 1
    m, ctx = cache.machine("R2"), cache.ctx("R2")
    reports = run_checks(cache.model("R2").defs,
                         ExploreConfig(max_states=50),
                         only_machines=["R2"])
    assert overall_exit_code(reports) == 2  # bound-exhausted only


def test_report_json_schema(cache):
    reports = cache.reports("MUT-TICK")
    for r in reports:
        d = report_to_dict(r)
        assert set(d) >= {"machine", "obligations", "states_explored",
                          "bound_exhausted"}
        for o in d["obligations"]:
            assert o["kind"] in ("INV", "DLK", "VAR", "ENB", "GRD_REF",
                                 "SIM_REF", "AXM", "INIT")
            assert o["verdict"] in ("proved", "violated", "bound-exhausted")
            if o["verdict"] == "violated":
                assert "trace" in o and "depth" in o
                trace = o["trace"]
                assert all(
                    isinstance(step["state"], dict)
                    and all(isinstance(v, str) for v in step["state"].values())
                    for step in trace["steps"])


def test_init_bounds_fault_reported_not_crashed():
    model = load_source("""
machine Bad
  variables x : bounds 0 5
  init a1: x := 99
  events
    event spin where g1: x = 0 then a1: x := 0 end
end
""")
    reports = run_checks(model.defs)
    (r,) = reports
    assert r.errors and "outside declared bounds" in r.errors[0]
    assert overall_exit_code(reports) == 1
