import json
import shutil

import pytest

from specforge.corpus import default_root, load_corpus
from specforge.errors import ManifestMismatchError


def test_shipped_corpus_loads(corpus):
    entries, scenarios = corpus
    assert len(entries) >= 7
    assert {"R0", "R1", "R2", "R2-det", "MUT-TICK", "MUT-DLK", "MUT-SIM",
            "MUT-GLUE"} <= set(entries)
    assert {"over-temp-preparation", "over-temp-therapy",
            "wrong-alarm"} == set(scenarios)
    for e in entries.values():
        assert e.model is not None
        assert e.machine in e.model.machines


def test_shipped_corpus_verdicts_reproduce(corpus_root):
    # the manifest's expected verdicts, violated subjects, reachable counts
    # and scenario outcomes are all re-derived by the checker here
    entries, scenarios = load_corpus(corpus_root, verify=True)
    assert len(entries) >= 7


def test_empty_directory_is_manifest_mismatch(tmp_path):
    with pytest.raises(ManifestMismatchError):
        load_corpus(tmp_path)


def test_missing_entry_file_is_manifest_mismatch(tmp_path, corpus_root):
    shutil.copy(corpus_root / "manifest.json", tmp_path / "manifest.json")
    with pytest.raises(ManifestMismatchError, match="missing file"):
        load_corpus(tmp_path)


def test_stale_verdict_names_the_obligation(tmp_path, corpus_root):
    shutil.copytree(corpus_root / "hd", tmp_path / "hd")
    shutil.copytree(corpus_root / "mutants", tmp_path / "mutants")
    shutil.copytree(corpus_root / "scenarios", tmp_path / "scenarios")
    manifest = json.loads((corpus_root / "manifest.json").read_text())
    manifest["entries"] = [e for e in manifest["entries"] if e["id"] == "R0"]
    manifest["entries"][0]["expect"]["DLK"] = "violated"  # stale on purpose
    manifest["scenarios"] = []
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ManifestMismatchError, match="DLK"):
        load_corpus(tmp_path, verify=True)


def test_stale_reachable_count_detected(tmp_path, corpus_root):
    shutil.copytree(corpus_root / "hd", tmp_path / "hd")
    shutil.copytree(corpus_root / "scenarios", tmp_path / "scenarios")
    manifest = json.loads((corpus_root / "manifest.json").read_text())
    manifest["entries"] = [e for e in manifest["entries"] if e["id"] == "R0"]
    manifest["entries"][0]["reachable_states"] = 99
    manifest["scenarios"] = []
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ManifestMismatchError, match="reachable"):
        load_corpus(tmp_path, verify=True)


def test_default_root_finds_corpus(corpus_root):
    assert default_root(corpus_root / "hd") == corpus_root
    assert default_root("/") is None
