"""The shipped model corpus: manifest loading and verdict verification.

The corpus root holds hd/ (the refinement chain), mutants/ (single-edit
seeded faults), scenarios/ (.scn walkthroughs) and manifest.json recording
the expected verdict for every obligation kind per entry. verify=True re-runs
the checker and raises ManifestMismatchError naming the first divergence, so
stale manifests cannot survive a test run.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .animator import load_scenario, scenario_run
from .checker import CheckReport, ExploreConfig, run_checks
from .errors import ManifestMismatchError
from .loader import LoadedModel, load_files


@dataclass
class CorpusEntry:
    id: str
    files: tuple
    machine: str
    description: str = ""
    expect: dict = field(default_factory=dict)  # obligation kind -> verdict
    expect_error: Optional[str] = None
    reachable_states: Optional[int] = None
    violated_subjects: tuple = ()
    model: Optional[LoadedModel] = None


@dataclass
class ScenarioEntry:
    name: str
    file: str
    model: str
    machine: str
    expect: str  # pass | fail
    fail_step: Optional[int] = None


def _aggregate(reports: list[CheckReport]) -> dict:
    """Collapses obligations to one verdict per kind: violated wins, then
    bound-exhausted, then proved."""
    rank = {"proved": 0, "bound-exhausted": 1, "violated": 2}
    agg: dict = {}
    for r in reports:
        for o in r.obligations:
            cur = agg.get(o.kind)
            if cur is None or rank[o.verdict] > rank[cur]:
                agg[o.kind] = o.verdict
    return agg


def load_corpus(root: Union[str, Path], verify: bool = False,
                cfg: Optional[ExploreConfig] = None
                ) -> tuple[list[CorpusEntry], list[ScenarioEntry]]:
    """Loads every manifest entry (parse + type check). With verify=True the
    checker and scenario runner are re-run and compared against the recorded
    verdicts."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise ManifestMismatchError(f"no manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestMismatchError(f"unreadable manifest: {exc}") from exc

    entries: list[CorpusEntry] = []
    for raw in manifest.get("entries", ()):
        entry = CorpusEntry(
            id=raw["id"],
            files=tuple(raw["files"]),
            machine=raw["machine"],
            description=raw.get("description", ""),
            expect=dict(raw.get("expect", {})),
            expect_error=raw.get("expect_error"),
            reachable_states=raw.get("reachable_states"),
            violated_subjects=tuple(raw.get("violated_subjects", ())),
        )
        paths = [root / f for f in entry.files]
        missing = [p for p in paths if not p.is_file()]
        if missing:
            raise ManifestMismatchError(
                f"entry {entry.id}: missing file {missing[0]}")
        model = load_files(paths)
        if not model.ok:
            raise ManifestMismatchError(
                f"entry {entry.id}: parse failed: {model.diagnostics[0]}")
        tc = [d for d in model.type_check() if d.severity == "error"]
        if tc:
            raise ManifestMismatchError(
                f"entry {entry.id}: type check failed: {tc[0]}")
        if entry.machine not in model.machines:
            raise ManifestMismatchError(
                f"entry {entry.id}: machine '{entry.machine}' not defined")
        entry.model = model
        entries.append(entry)

    scenarios = [
        ScenarioEntry(
            name=raw["name"], file=raw["file"], model=raw["model"],
            machine=raw["machine"], expect=raw["expect"],
            fail_step=raw.get("fail_step"),
        )
        for raw in manifest.get("scenarios", ())
    ]
    for sc in scenarios:
        if not (root / sc.file).is_file():
            raise ManifestMismatchError(f"scenario {sc.name}: missing file")

    if verify:
        _verify(root, entries, scenarios, cfg or ExploreConfig())
    return entries, scenarios


def _verify(root: Path, entries: list[CorpusEntry],
            scenarios: list[ScenarioEntry], cfg: ExploreConfig):
    for entry in entries:
        reports = run_checks(entry.model.defs, cfg)
        agg = _aggregate(reports)
        for kind, expected in entry.expect.items():
            actual = agg.get(kind)
            if actual != expected:
                raise ManifestMismatchError(
                    f"entry {entry.id}: obligation {kind} is {actual}, "
                    f"manifest says {expected}")
        errors = [e for r in reports for e in r.errors]
        if entry.expect_error:
            if not any(entry.expect_error in e for e in errors):
                raise ManifestMismatchError(
                    f"entry {entry.id}: expected error "
                    f"{entry.expect_error}, got {errors or 'none'}")
        elif errors:
            raise ManifestMismatchError(
                f"entry {entry.id}: unexpected checker error {errors[0]}")
        if entry.violated_subjects:
            actual_subjects = {
                o.subject for r in reports for o in r.obligations
                if o.verdict == "violated"
            }
            for subject in entry.violated_subjects:
                if subject not in actual_subjects:
                    raise ManifestMismatchError(
                        f"entry {entry.id}: expected violated subject "
                        f"'{subject}' not reported")
        if entry.reachable_states is not None:
            m = entry.model.machine(entry.machine)
            for r in reports:
                if r.machine == entry.machine:
                    if r.states_explored != entry.reachable_states:
                        raise ManifestMismatchError(
                            f"entry {entry.id}: {r.states_explored} reachable "
                            f"states, manifest says {entry.reachable_states}")
                    break

    for sc in scenarios:
        model = load_files([root / sc.model])
        m = model.machine(sc.machine)
        report = scenario_run(m, load_scenario(root / sc.file),
                              model.context_of(m))
        if sc.expect == "pass" and not report.passed:
            raise ManifestMismatchError(
                f"scenario {sc.name}: expected pass, {report.describe()}")
        if sc.expect == "fail":
            if report.passed:
                raise ManifestMismatchError(
                    f"scenario {sc.name}: expected failure, it passed")
            if sc.fail_step is not None and report.failed_step != sc.fail_step:
                raise ManifestMismatchError(
                    f"scenario {sc.name}: failed at step {report.failed_step}, "
                    f"manifest says {sc.fail_step}")


def default_root(start: Union[str, Path] = ".") -> Optional[Path]:
    """Walks up from `start` looking for a corpus/manifest.json."""
    cur = Path(start).resolve()
    for candidate in [cur, *cur.parents]:
        probe = candidate / "corpus" / "manifest.json"
        if probe.is_file():
            return probe.parent
    return None
