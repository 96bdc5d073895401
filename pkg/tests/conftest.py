import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from specforge.checker import ExploreConfig, run_checks
from specforge.corpus import load_corpus

from oracle import Oracle


@pytest.fixture(scope="session")
def corpus_root() -> Path:
    return ROOT / "corpus"


@pytest.fixture(scope="session")
def corpus(corpus_root):
    """Manifest entries, parsed and type-checked (no verdict verification
    here; that is its own test)."""
    entries, scenarios = load_corpus(corpus_root, verify=False)
    return {e.id: e for e in entries}, {s.name: s for s in scenarios}


class _LazyCache:
    """Computes expensive per-entry artifacts once per session."""

    def __init__(self, entries):
        self.entries = entries
        self._oracle = {}
        self._oracle_sets = {}
        self._reports = {}

    def model(self, entry_id):
        return self.entries[entry_id].model

    def machine(self, entry_id):
        e = self.entries[entry_id]
        return e.model.machine(e.machine)

    def ctx(self, entry_id):
        return self.model(entry_id).context_of(self.machine(entry_id))

    def oracle(self, entry_id) -> Oracle:
        if entry_id not in self._oracle:
            self._oracle[entry_id] = Oracle(self.machine(entry_id),
                                            self.ctx(entry_id))
        return self._oracle[entry_id]

    def oracle_set(self, entry_id) -> frozenset:
        if entry_id not in self._oracle_sets:
            self._oracle_sets[entry_id] = frozenset(
                self.oracle(entry_id).reachable())
        return self._oracle_sets[entry_id]

    def reports(self, entry_id, cfg=None):
        key = (entry_id, cfg)
        if key not in self._reports:
            self._reports[key] = run_checks(
                self.model(entry_id).defs, cfg or ExploreConfig())
        return self._reports[key]


@pytest.fixture(scope="session")
def cache(corpus):
    entries, _ = corpus
    return _LazyCache(entries)


def obligations_of(reports, kind=None, machine=None):
    out = []
    for r in reports:
        if machine is not None and r.machine != machine:
            continue
        for o in r.obligations:
            if kind is None or o.kind == kind:
                out.append(o)
    return out
