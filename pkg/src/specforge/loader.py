"""Loading `.ebs` files into a linked model.

A load set may span several files; context/machine references resolve by name
after all files are parsed. References that stay unresolved trigger one round
of sibling lookup: `<name lowercased>.ebs` next to the referencing file. That
makes `check corpus/hd/r2.ebs` pull in c0/r0/r1 automatically.

Linking rewrites identifier expressions that name carrier-set members into
SymbolRef nodes, so later passes can distinguish symbols from variables.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .evaluator import machine_context, type_check
from .kernel import (
    Assign,
    ContextDef,
    Expr,
    Labeled,
    MachineDef,
)
from .parser import Diagnostic, ParseResult, SourceSpan, parse_module


@dataclass
class LoadedModel:
    """A parsed, linked load set. `defs` preserves discovery order."""

    defs: tuple[Union[ContextDef, MachineDef], ...] = ()
    files: tuple[str, ...] = ()
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)

    @property
    def contexts(self) -> dict[str, ContextDef]:
        return {d.name: d for d in self.defs if isinstance(d, ContextDef)}

    @property
    def machines(self) -> dict[str, MachineDef]:
        return {d.name: d for d in self.defs if isinstance(d, MachineDef)}

    def machine(self, name: Optional[str] = None) -> MachineDef:
        ms = self.machines
        if name is not None:
            return ms[name]
        if not ms:
            raise KeyError("load set contains no machines")
        # default to the most concrete machine: one that nothing else refines
        refined = {m.refines for m in ms.values() if m.refines}
        for m in ms.values():
            if m.name not in refined:
                return m
        return list(ms.values())[0]  # refinement cycle; type_check reports it

    def context_of(self, m: MachineDef) -> ContextDef:
        return machine_context(m, self.contexts)

    def type_check(self) -> list[Diagnostic]:
        return type_check(self.defs)


def _rewrite_expr(e: Expr, symbols: set[str]) -> Expr:
    if e.kind == "VarRef" and e.payload in symbols:
        out = Expr("SymbolRef", payload=e.payload)
        object.__setattr__(out, "span", e.span)
        return out
    if not e.children:
        return e
    kids = tuple(_rewrite_expr(c, symbols) for c in e.children)
    if kids == e.children:
        return e
    out = Expr(e.kind, kids, e.payload)
    object.__setattr__(out, "span", e.span)
    return out


def _link_labeled(items, symbols):
    return tuple(Labeled(l.label, _rewrite_expr(l.expr, symbols)) for l in items)


def _link_assigns(items, symbols):
    return tuple(
        Assign(a.label, a.var, _rewrite_expr(a.expr, symbols)) for a in items
    )


def link_machine(m: MachineDef, contexts: dict[str, ContextDef]) -> MachineDef:
    try:
        ctx = machine_context(m, contexts)
    except (KeyError, ValueError):
        return m  # unresolved context; type_check reports it
    symbols = set(ctx.symbol_carrier())
    events = tuple(
        dataclasses.replace(
            ev,
            guards=_link_labeled(ev.guards, symbols),
            actions=_link_assigns(ev.actions, symbols),
        )
        for ev in m.events
    )
    return dataclasses.replace(
        m,
        invariants=_link_labeled(m.invariants, symbols),
        gluing=_link_labeled(m.gluing, symbols),
        variant=_rewrite_expr(m.variant, symbols) if m.variant is not None else None,
        init=_link_assigns(m.init, symbols),
        events=events,
    )


def link_context(c: ContextDef, contexts: dict[str, ContextDef]) -> ContextDef:
    symbols = set(c.symbol_carrier())
    seen = {c.name}
    cur = c.extends
    while cur is not None and cur in contexts and cur not in seen:
        seen.add(cur)
        symbols |= set(contexts[cur].symbol_carrier())
        cur = contexts[cur].extends
    return dataclasses.replace(c, axioms=_link_labeled(c.axioms, symbols))


def _unresolved_references(defs) -> list[tuple[str, Union[ContextDef, MachineDef]]]:
    contexts = {d.name for d in defs if isinstance(d, ContextDef)}
    machines = {d.name for d in defs if isinstance(d, MachineDef)}
    missing = []
    for d in defs:
        if isinstance(d, ContextDef):
            if d.extends is not None and d.extends not in contexts:
                missing.append((d.extends, d))
        else:
            for seen in d.sees:
                if seen not in contexts:
                    missing.append((seen, d))
            if d.refines is not None and d.refines not in machines:
                missing.append((d.refines, d))
    return missing


def load_files(paths: Sequence[Union[str, Path]], auto_resolve: bool = True
               ) -> LoadedModel:
    """Parses a load set. Raises FileNotFoundError for explicitly named files;
    parse faults become diagnostics. With auto_resolve, unresolved references
    are satisfied from sibling files when present."""
    queue = [Path(p) for p in paths]
    for p in queue:
        if not p.is_file():
            raise FileNotFoundError(p)
    loaded: dict[Path, ParseResult] = {}
    origin: dict[str, Path] = {}
    defs: list[Union[ContextDef, MachineDef]] = []
    diagnostics: list[Diagnostic] = []

    def ingest(path: Path):
        path = path.resolve()
        if path in loaded:
            return
        result = parse_module(path.read_text(encoding="utf-8"), str(path))
        loaded[path] = result
        diagnostics.extend(result.diagnostics)
        for d in result.defs:
            if d.name in origin:
                span = d.span or SourceSpan(str(path), 1, 1, 1, 1)
                diagnostics.append(Diagnostic(
                    "error",
                    f"'{d.name}' already defined in {origin[d.name]}", span))
                continue
            origin[d.name] = path
            defs.append(d)

    for p in queue:
        ingest(p)

    if auto_resolve:
        for _ in range(64):  # chains are short; bound the fixpoint anyway
            missing = _unresolved_references(defs)
            progress = False
            for name, referrer in missing:
                base = origin.get(referrer.name)
                if base is None:
                    continue
                candidate = base.parent / f"{name.lower()}.ebs"
                if candidate.is_file() and candidate.resolve() not in loaded:
                    ingest(candidate)
                    progress = True
            if not progress:
                break

    if any(d.severity == "error" for d in diagnostics):
        return LoadedModel(defs=(), files=tuple(str(p) for p in loaded),
                           diagnostics=diagnostics)

    contexts = {d.name: d for d in defs if isinstance(d, ContextDef)}
    linked: list[Union[ContextDef, MachineDef]] = []
    for d in defs:
        if isinstance(d, ContextDef):
            linked.append(link_context(d, contexts))
        else:
            linked.append(link_machine(d, contexts))
    return LoadedModel(defs=tuple(linked), files=tuple(str(p) for p in loaded),
                       diagnostics=diagnostics)


def load_source(text: str, file_name: str = "<input>") -> LoadedModel:
    """Single-source convenience used by tests: parse + link, no file I/O."""
    result = parse_module(text, file_name)
    if not result.ok:
        return LoadedModel(defs=(), files=(file_name,),
                           diagnostics=list(result.diagnostics))
    contexts = {d.name: d for d in result.defs if isinstance(d, ContextDef)}
    linked = tuple(
        link_context(d, contexts) if isinstance(d, ContextDef)
        else link_machine(d, contexts)
        for d in result.defs
    )
    return LoadedModel(defs=linked, files=(file_name,), diagnostics=[])
