import shutil
import subprocess

import pytest

from specforge.codegen import check_subset, generate, run_schedule
from specforge.errors import NotInSubsetError
from specforge.loader import load_source

CC = shutil.which("cc") or shutil.which("gcc")


def _build_and_run(tmp_path, source, args):
    cpath = tmp_path / "prog.c"
    exe = tmp_path / "prog"
    cpath.write_text(source)
    compile_result = subprocess.run(
        [CC, "-std=c99", "-O1", "-o", str(exe), str(cpath)],
        capture_output=True, text=True)
    assert compile_result.returncode == 0, compile_result.stderr
    return subprocess.run([str(exe), *args], capture_output=True, text=True)


def test_r2det_eligible(cache):
    rep = check_subset(cache.machine("R2-det"), cache.ctx("R2-det"))
    assert rep.eligible and rep.violations == ()


def test_parameterized_machine_rejected(cache):
    rep = check_subset(cache.machine("R2"), cache.ctx("R2"))
    assert not rep.eligible
    assert any("parameters" in v.message for v in rep.violations)
    with pytest.raises(NotInSubsetError):
        generate(cache.machine("R2"), cache.ctx("R2"))


def test_multi_element_set_variable_rejected():
    model = load_source("""
context C sets S = { A, B } end
machine M sees C
  variables pool : { S }
  init a1: pool := {A, B}
  events
    event drain where g1: pool = {A, B} then a1: pool := {A} end
end
""")
    m = model.machine("M")
    rep = check_subset(m, model.context_of(m))
    assert not rep.eligible
    assert any("single-maplet" in v.message or "subset" in v.message
               for v in rep.violations)


def test_nondeterministic_without_priority_rejected():
    model = load_source("""
machine M
  variables x : bounds 0 3
  init a1: x := 0
  events
    event a where g1: x < 3 then a1: x := x + 1 end
    event b where g1: x < 3 then a1: x := 0 end
end
""")
    m = model.machine("M")
    rep = check_subset(m)
    assert not rep.eligible
    assert any("priority" in v.message for v in rep.violations)


def test_cosimulation_r2det_1000_steps(cache, tmp_path):
    m, ctx = cache.machine("R2-det"), cache.ctx("R2-det")
    src = generate(m, ctx)
    run = _build_and_run(tmp_path, src, ["1000"])
    trace, deadlocked = run_schedule(m, ctx, 1000)
    assert not deadlocked
    assert run.returncode == 0
    assert run.stdout == trace  # byte-for-byte
    assert trace.count("step ") == 1000
    # the trace visits the whole safety story
    assert "disconnectDialyserPreparation" in trace
    assert "alarm=ALM377" in trace and "alarm=NoAlarm" in trace
    assert "dialyserDisconnectionTime=59" in trace


def test_cosimulation_respects_runtime_step_limit(cache, tmp_path):
    m, ctx = cache.machine("R2-det"), cache.ctx("R2-det")
    src = generate(m, ctx)
    run = _build_and_run(tmp_path, src, ["73"])
    trace, _ = run_schedule(m, ctx, 73)
    assert run.stdout == trace
    run_zero = _build_and_run(tmp_path, src, ["0"])
    assert run_zero.stdout == "" and run_zero.returncode == 0


def test_cosimulation_holds_to_ten_thousand_steps(cache, tmp_path):
    m, ctx = cache.machine("R2-det"), cache.ctx("R2-det")
    run = _build_and_run(tmp_path, generate(m, ctx), ["10000"])
    trace, _ = run_schedule(m, ctx, 10_000)
    assert run.stdout == trace
    assert trace.count("step ") == 10_000


def test_generated_source_deterministic(cache):
    m, ctx = cache.machine("R2-det"), cache.ctx("R2-det")
    assert generate(m, ctx) == generate(m, ctx)


def test_self_loop_machine_runs_to_step_limit(tmp_path):
    model = load_source("""
machine Loop
  variables x : bounds 0 1
  init a1: x := 0
  events
    event spin where g1: x = 0 then a1: x := 0 end
end
""")
    m = model.machine("Loop")
    src = generate(m)
    run = _build_and_run(tmp_path, src, ["50"])
    trace, deadlocked = run_schedule(m, step_limit=50)
    assert run.stdout == trace and run.returncode == 0 and not deadlocked
    lines = trace.splitlines()
    assert len(lines) == 100  # 50 steps x (step line + one variable line)
    assert all(lines[i].startswith(f"step {i // 2 + 1}: spin")
               for i in range(0, 100, 2))


def test_deadlocked_at_init_prints_nothing_exits_one(tmp_path):
    model = load_source("""
machine Stuck
  variables x : bounds 0 1
  init a1: x := 0
  events
    event go where g1: x = 1 then a1: x := 0 end
end
""")
    m = model.machine("Stuck")
    src = generate(m)
    run = _build_and_run(tmp_path, src, [])
    assert run.stdout == "" and run.returncode == 1
    trace, deadlocked = run_schedule(m)
    assert trace == "" and deadlocked


def test_parallel_assignment_swap(tmp_path):
    model = load_source("""
machine Swap
  variables x : bounds 0 9 y : bounds 0 9
  init a1: x := 1 a2: y := 2
  events
    event swap where g1: x = 1 or y = 1 then a1: x := y a2: y := x end
end
""")
    m = model.machine("Swap")
    src = generate(m)
    run = _build_and_run(tmp_path, src, ["2"])
    trace, _ = run_schedule(m, step_limit=2)
    assert run.stdout == trace
    # after one swap x=2,y=1; after two swaps back to x=1,y=2
    assert "  x=2\n  y=1" in trace
    lines = trace.splitlines()
    assert lines[-2:] == ["  x=1", "  y=2"]


def test_priority_clause_orders_scheduler(tmp_path):
    model = load_source("""
machine P
  variables x : bounds 0 5
  init a1: x := 0
  events
    event late where g1: x < 5 then a1: x := x + 1 end
    event early where g1: x = 0 then a1: x := 5 end
  priority early, late
end
""")
    m = model.machine("P")
    rep = check_subset(m)
    assert rep.eligible  # multi-enabled at x=0, but priority is declared
    trace, _ = run_schedule(m, step_limit=1)
    assert trace.splitlines()[0] == "step 1: early"
    src = generate(m)
    run = _build_and_run(tmp_path, src, ["1"])
    assert run.stdout == trace


def test_bool_variable_codegen(tmp_path):
    model = load_source("""
machine B
  variables armed : bool x : bounds 0 3
  init a1: armed := false a2: x := 0
  events
    event arm where g1: armed = false then a1: armed := true end
    event step where g1: armed = true & x < 3 then a1: x := x + 1 end
  priority arm, step
end
""")
    m = model.machine("B")
    src = generate(m)
    run = _build_and_run(tmp_path, src, ["3"])
    trace, _ = run_schedule(m, step_limit=3)
    assert run.stdout == trace
    assert "armed=true" in trace and "armed=false" not in trace.splitlines()[1]
