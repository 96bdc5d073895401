"""Command-line entry point: check | serve | generate | scenario | fmt.

Exit codes are stable API: 0 all proved, 1 any obligation violated, 2
bound-exhausted only; 64 usage, 65 model/parse errors, 66 missing input,
69 port unavailable, 73 cannot write output. Reports go to stdout,
diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import errno
import json
import os
import sys
from pathlib import Path

from .animator import load_scenario, scenario_run
from .checker import (
    ExploreConfig,
    overall_exit_code,
    report_to_dict,
    run_checks,
)
from .codegen import check_subset, generate
from .errors import NotInSubsetError, SpecForgeError
from .kernel import format_value
from .loader import load_files
from .parser import ParseError, parse_module, pretty_print
from .service import AnimatorService, make_server

EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66
EX_UNAVAILABLE = 69
EX_CANTCREAT = 73


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="specforge",
                description="Model checker, animator and code generator for "
                            "guarded-event machine specifications (.ebs)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="discharge proof obligations")
    c.add_argument("paths", nargs="+", help=".ebs files (load set)")
    c.add_argument("--refines", action="append", default=[],
                   metavar="FILE", help="add abstract machine file(s)")
    c.add_argument("--machine", action="append", default=[],
                   help="restrict to named machine(s)")
    c.add_argument("--json", action="store_true", help="JSON report")
    c.add_argument("--max-states", type=int, default=None)
    c.add_argument("--max-depth", type=int, default=None)

    s = sub.add_parser("serve", help="run the interactive animator service")
    s.add_argument("path", help=".ebs file")
    s.add_argument("--machine", default=None)
    s.add_argument("--port", type=int, default=7077)
    s.add_argument("--scenarios", default=None, metavar="DIR")
    s.add_argument("--ui", default=None, metavar="DIR",
                   help="serve a built frontend from DIR")

    g = sub.add_parser("generate", help="translate to C")
    g.add_argument("path", help=".ebs file")
    g.add_argument("--machine", default=None)
    g.add_argument("--out", default=None, metavar="FILE")
    g.add_argument("--step-limit", type=int, default=1000,
                   help="default step limit compiled into the program")

    r = sub.add_parser("scenario", help="run scenario file(s)")
    r.add_argument("model", help=".ebs file")
    r.add_argument("scn", nargs="+", help=".scn file(s)")
    r.add_argument("--machine", default=None)
    r.add_argument("--json", action="store_true")

    f = sub.add_parser("fmt", help="pretty-print files in place")
    f.add_argument("paths", nargs="+")
    return p


def _config(args) -> ExploreConfig:
    max_states = args.max_states
    if max_states is None:
        env = os.environ.get("SPECFORGE_MAX_STATES")
        max_states = int(env) if env else 1_000_000
    return ExploreConfig(max_states=max_states,
                         max_depth=getattr(args, "max_depth", None))


def _load(paths) -> "LoadedModel":
    try:
        model = load_files(paths)
    except FileNotFoundError as exc:
        print(f"specforge: no such file: {exc.args[0]}", file=sys.stderr)
        raise SystemExit(EX_NOINPUT)
    if not model.ok:
        for d in model.diagnostics:
            print(d, file=sys.stderr)
        raise SystemExit(EX_DATAERR)
    diags = model.type_check()
    errors = [d for d in diags if d.severity == "error"]
    for d in diags:
        print(d, file=sys.stderr)
    if errors:
        raise SystemExit(EX_DATAERR)
    return model


def _print_text_report(reports, cfg):
    for r in reports:
        head = f"== {r.machine}"
        if r.states_explored or r.transitions:
            head += (f": {r.states_explored} states, "
                     f"{r.transitions} transitions "
                     f"(bound {cfg.max_states})")
        if r.bound_exhausted:
            head += "  [bound exhausted]"
        print(head)
        for o in r.obligations:
            line = f"  {o.kind:8s} {o.subject:32s} {o.verdict}"
            if o.message:
                line += f"  ({o.message})"
            print(line)
            if o.counterexample is not None:
                cex = o.counterexample
                print(f"    counterexample depth {cex.depth}:")
                for i, (ev, binding, _state) in enumerate(cex.steps, start=1):
                    args = "".join(
                        f" {k}={format_value(v)}" for k, v in binding.items())
                    print(f"      {i}. {ev}{args}")
                final = cex.final_state()
                shown = ", ".join(f"{k}={format_value(v)}"
                                  for k, v in final.items())
                print(f"      final state: {shown}")
        for e in r.errors:
            print(f"  ERROR: {e}")


def cmd_check(args) -> int:
    model = _load(list(args.paths) + list(args.refines))
    cfg = _config(args)
    only = args.machine or None
    try:
        reports = run_checks(model.defs, cfg, only_machines=only)
    except SpecForgeError as exc:
        print(f"specforge: {exc}", file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps([report_to_dict(r) for r in reports], indent=2))
    else:
        _print_text_report(reports, cfg)
    return overall_exit_code(reports)


def cmd_serve(args) -> int:
    model = _load([args.path])
    m = model.machine(args.machine)
    ctx = model.context_of(m)
    scen_dir = args.scenarios
    if scen_dir is None:
        guess = Path(args.path).resolve().parent.parent / "scenarios"
        scen_dir = guess if guess.is_dir() else None
    scenarios = {}
    if scen_dir:
        for f in sorted(Path(scen_dir).glob("*.scn")):
            try:
                scenarios[f.stem] = load_scenario(f)
            except ParseError as exc:
                print(f"skipping scenario {f}: {exc}", file=sys.stderr)
    ui_dir = args.ui
    if ui_dir is None:
        guess = Path.cwd() / "frontend" / "dist"
        ui_dir = guess if guess.is_dir() else None
    service = AnimatorService(m, ctx, scenarios, ui_dir)
    try:
        server = make_server(service, port=args.port)
    except OSError as exc:
        if exc.errno in (errno.EADDRINUSE, errno.EACCES):
            print(f"specforge: port {args.port} unavailable: {exc}",
                  file=sys.stderr)
            return EX_UNAVAILABLE
        raise
    host, port = server.server_address[:2]
    print(f"animating {m.name} at http://{host}:{port}/  (Ctrl-C to stop)")
    sys.stdout.flush()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_generate(args) -> int:
    model = _load([args.path])
    m = model.machine(args.machine)
    ctx = model.context_of(m)
    report = check_subset(m, ctx)
    if not report.eligible:
        print(f"machine {m.name} is not in the generatable subset:")
        for v in report.violations:
            print(f"  {v.message}")
        return 1
    try:
        src = generate(m, ctx, default_step_limit=args.step_limit)
    except NotInSubsetError as exc:
        print(f"specforge: {exc}", file=sys.stderr)
        return 1
    out = args.out or f"{m.name.lower()}.c"
    try:
        Path(out).write_text(src, encoding="utf-8")
    except OSError as exc:
        print(f"specforge: cannot write {out}: {exc}", file=sys.stderr)
        return EX_CANTCREAT
    print(f"wrote {out}")
    return 0


def cmd_scenario(args) -> int:
    model = _load([args.model])
    m = model.machine(args.machine)
    ctx = model.context_of(m)
    worst = 0
    results = []
    for path in args.scn:
        if not Path(path).is_file():
            print(f"specforge: no such file: {path}", file=sys.stderr)
            return EX_NOINPUT
        try:
            sc = load_scenario(path)
        except ParseError as exc:
            print(exc.diagnostic, file=sys.stderr)
            return EX_DATAERR
        report = scenario_run(m, sc, ctx)
        results.append(report)
        if not report.passed:
            worst = 1
    if args.json:
        print(json.dumps([
            {"name": r.name, "passed": r.passed, "steps_run": r.steps_run,
             "failed_step": r.failed_step, "reason": r.reason}
            for r in results], indent=2))
    else:
        for r in results:
            print(r.describe())
    return worst


def cmd_fmt(args) -> int:
    for path in args.paths:
        p = Path(path)
        if not p.is_file():
            print(f"specforge: no such file: {path}", file=sys.stderr)
            return EX_NOINPUT
        result = parse_module(p.read_text(encoding="utf-8"), str(p))
        if not result.ok:
            for d in result.diagnostics:
                print(d, file=sys.stderr)
            return EX_DATAERR
        p.write_text(pretty_print(result.defs), encoding="utf-8")
        print(f"formatted {path}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "check": cmd_check,
        "serve": cmd_serve,
        "generate": cmd_generate,
        "scenario": cmd_scenario,
        "fmt": cmd_fmt,
    }[args.command]
    try:
        code = handler(args)
    except SystemExit:
        raise
    except BrokenPipeError:
        return 0
    return code


if __name__ == "__main__":
    sys.exit(main())
