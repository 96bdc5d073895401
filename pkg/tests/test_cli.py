import json
import os
import subprocess
import sys
import urllib.request
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def run_cli(*args, env=None, **kw):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "specforge.cli", *args],
        capture_output=True, text=True, env=full_env, cwd=ROOT, **kw)


def test_check_refinement_chain_exit_zero():
    r = run_cli("check", str(CORPUS / "hd" / "r2.ebs"),
                "--refines", str(CORPUS / "hd" / "r1.ebs"))
    assert r.returncode == 0, r.stderr
    assert "GRD_REF" in r.stdout and "SIM_REF" in r.stdout and "ENB" in r.stdout
    assert "violated" not in r.stdout


def test_check_mutant_exit_one_with_trace():
    r = run_cli("check", str(CORPUS / "mutants" / "mut_tick.ebs"))
    assert r.returncode == 1
    assert "inv_deadline" in r.stdout
    assert "counterexample depth 61" in r.stdout
    assert "setTemperature t=42" in r.stdout


def test_check_missing_file_exit_66():
    r = run_cli("check", "no-such-model.ebs")
    assert r.returncode == 66


def test_usage_error_exit_64():
    r = run_cli("bogus-command")
    assert r.returncode == 64
    r = run_cli("check")  # missing required paths
    assert r.returncode == 64


def test_bad_model_exit_65(tmp_path):
    bad = tmp_path / "bad.ebs"
    bad.write_text("x := := 1")
    r = run_cli("check", str(bad))
    assert r.returncode == 65
    assert "error" in r.stderr
    assert r.stdout == ""  # diagnostics go to stderr


def test_check_json_schema():
    r = run_cli("check", str(CORPUS / "hd" / "r0.ebs"), "--json")
    assert r.returncode == 0
    reports = json.loads(r.stdout)
    machines = {rep["machine"] for rep in reports}
    assert "R0" in machines
    for rep in reports:
        assert set(rep) >= {"machine", "obligations", "states_explored",
                            "bound_exhausted"}


def test_max_states_env_gives_bound_exhausted_exit_two():
    r = run_cli("check", str(CORPUS / "hd" / "r2.ebs"), "--machine", "R2",
                env={"SPECFORGE_MAX_STATES": "100"})
    assert r.returncode == 2
    assert "bound" in r.stdout


def test_generate_writes_file(tmp_path):
    out = tmp_path / "r2det.c"
    r = run_cli("generate", str(CORPUS / "hd" / "r2det.ebs"),
                "--out", str(out))
    assert r.returncode == 0 and out.is_file()
    assert "int main" in out.read_text()


def test_generate_rejects_parameterized_machine(tmp_path):
    r = run_cli("generate", str(CORPUS / "hd" / "r2.ebs"),
                "--out", str(tmp_path / "r2.c"))
    assert r.returncode == 1
    assert "not in the generatable subset" in r.stdout
    assert "parameters" in r.stdout


def test_generate_unwritable_output_exit_73(tmp_path):
    # a parent that is a regular file fails with an OSError even for root
    blocker = tmp_path / "not-a-dir"
    blocker.write_text("")
    r = run_cli("generate", str(CORPUS / "hd" / "r2det.ebs"),
                "--out", str(blocker / "out.c"))
    assert r.returncode == 73


def test_scenario_command_exit_codes():
    r = run_cli("scenario", str(CORPUS / "hd" / "r2.ebs"),
                str(CORPUS / "scenarios" / "over-temp-preparation.scn"))
    assert r.returncode == 0 and "pass" in r.stdout
    r = run_cli("scenario", str(CORPUS / "hd" / "r2.ebs"),
                str(CORPUS / "scenarios" / "wrong-alarm.scn"), "--json")
    assert r.returncode == 1
    (rep,) = json.loads(r.stdout)
    assert rep["failed_step"] == 4


def test_fmt_idempotent(tmp_path):
    target = tmp_path / "m.ebs"
    target.write_text("machine   M0 variables\n\n invariants events end")
    r = run_cli("fmt", str(target))
    assert r.returncode == 0
    once = target.read_text()
    run_cli("fmt", str(target))
    assert target.read_text() == once
    assert once.startswith("machine M0")


def test_serve_port_zero_prints_url_and_answers():
    proc = subprocess.Popen(
        [sys.executable, "-m", "specforge.cli", "serve",
         str(CORPUS / "hd" / "r2.ebs"), "--port", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, cwd=ROOT)
    try:
        line = proc.stdout.readline()
        assert "http://" in line
        url = next(tok for tok in line.split() if tok.startswith("http://"))
        with urllib.request.urlopen(url + "api/state", timeout=5) as r:
            payload = json.load(r)
        assert payload["machine"] == "R2"
        assert payload["alarm"] == "NoAlarm"
    finally:
        proc.terminate()
        proc.wait(timeout=5)


def test_serve_port_in_use_exit_69():
    blocker = subprocess.Popen(
        [sys.executable, "-m", "specforge.cli", "serve",
         str(CORPUS / "hd" / "r2.ebs"), "--port", "7911"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, cwd=ROOT)
    try:
        assert "http://" in blocker.stdout.readline()
        r = run_cli("serve", str(CORPUS / "hd" / "r2.ebs"), "--port", "7911")
        assert r.returncode == 69
    finally:
        blocker.terminate()
        blocker.wait(timeout=5)
