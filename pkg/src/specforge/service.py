"""JSON-over-HTTP face of the animator, plus static file serving for the
browser UI.

Single session per machine; the single-threaded HTTP server processes
requests strictly sequentially, so no locking is needed around the session.
"""
from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path
from typing import Optional

from .animator import (
    Scenario,
    scenario_run,
    session_fire,
    session_log_scenario,
    session_start,
    session_undo,
)
from .errors import EmptyTraceError, EventNotEnabledError, SpecForgeError
from .evaluator import eval_expr, initial_state
from .kernel import ContextDef, MachineDef, format_type, format_value
from .parser import ParseError, format_expr, parse_expression

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>specforge animator</title></head>
<body>
<h1>specforge animator</h1>
<p>The service is running. The browser UI is not built; use the JSON API
(<code>/api/state</code>, <code>/api/fire</code>, ...) or build the frontend
and pass <code>--ui</code>.</p>
</body></html>
"""


class AnimatorService:
    """Owns the mutable Session; everything else it touches is immutable."""

    def __init__(self, machine: MachineDef, ctx: ContextDef,
                 scenarios: Optional[dict[str, Scenario]] = None,
                 ui_dir: Optional[Path] = None):
        self.machine = machine
        self.ctx = ctx
        self.scenarios = scenarios or {}
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.session = session_start(machine, ctx)

    # -- payloads

    def state_payload(self) -> dict:
        sess = self.session
        enabled = sess.enabled()
        return {
            "machine": self.machine.name,
            "state": {n: format_value(v) for n, v in sess.current.items()},
            "invariant_flags": sess.flags(),
            "alarm": sess.alarm(),
            "enabled": [
                {"event": e.event,
                 "binding": {k: format_value(v) for k, v in e.binding.items()}}
                for e in enabled
            ],
            "trace_len": sess.trace_len,
            "init_violations": list(sess.init_violations),
            "deadlock": not enabled,
        }

    def machine_payload(self) -> dict:
        m = self.machine
        return {
            "machine": m.name,
            "refines": m.refines,
            "variables": [
                {"name": n, "type": format_type(t)}
                for n, t in m.variables.items()
            ],
            "invariants": [
                {"label": lab.label, "text": format_expr(lab.expr)}
                for lab in m.invariants
            ],
            "events": [
                {
                    "name": ev.name,
                    "status": ev.status,
                    "params": [
                        {"name": n, "type": format_type(t)}
                        for n, t in ev.params.items()
                    ],
                    "guards": [
                        {"label": g.label, "text": format_expr(g.expr)}
                        for g in ev.guards
                    ],
                    "actions": [
                        f"{a.var} := {format_expr(a.expr)}" for a in ev.actions
                    ],
                }
                for ev in m.events
            ],
            "scenarios": sorted(self.scenarios),
        }

    def trace_payload(self) -> dict:
        sess = self.session
        init = {
            n: format_value(v)
            for n, v in initial_state(sess.machine, sess.ctx).items()
        }
        return {
            "init": init,
            "steps": [
                {
                    "event": ev.event,
                    "binding": {k: format_value(v)
                                for k, v in ev.binding.items()},
                    "state": {n: format_value(v) for n, v in state.items()},
                }
                for ev, state in sess.trace
            ],
            "scenario_log": [
                {"name": r.name, "passed": r.passed,
                 "failed_step": r.failed_step}
                for r in sess.scenario_log
            ],
        }

    # -- mutations (each returns (payload, http status))

    def fire(self, body: dict):
        event = body.get("event")
        raw_binding = body.get("binding") or {}
        if not isinstance(event, str) or not isinstance(raw_binding, dict):
            return {"error": "BadRequest"}, 400
        try:
            binding = {
                k: eval_expr(parse_expression(str(v)), None, None, self.ctx)
                for k, v in raw_binding.items()
            }
        except (ParseError, SpecForgeError):
            return {"error": "BadBinding"}, 400
        try:
            self.session = session_fire(self.session, event, binding)
        except EventNotEnabledError:
            return {"error": "EventNotEnabled"}, 409
        except SpecForgeError as exc:
            return {"error": type(exc).__name__, "detail": str(exc)}, 409
        return self.state_payload(), 200

    def undo(self):
        try:
            self.session = session_undo(self.session)
        except EmptyTraceError:
            return {"error": "EmptyTrace"}, 409
        return self.state_payload(), 200

    def reset(self):
        self.session = session_start(self.machine, self.ctx)
        return self.state_payload(), 200

    def run_scenario(self, body: dict):
        name = body.get("name")
        sc = self.scenarios.get(name)
        if sc is None:
            return {"error": "UnknownScenario", "known": sorted(self.scenarios)}, 404
        report = scenario_run(self.machine, sc, self.ctx)
        self.session = session_log_scenario(self.session, report)
        return {
            "name": report.name,
            "passed": report.passed,
            "steps_run": report.steps_run,
            "failed_step": report.failed_step,
            "reason": report.reason,
        }, 200


def _make_handler(service: AnimatorService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # quiet by default
            pass

        def _send(self, payload, status=200, content_type="application/json"):
            data = (json.dumps(payload).encode() if content_type ==
                    "application/json" else payload)
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            # one request per connection: the server is single-threaded and a
            # kept-alive idle connection would block every other client
            self.send_header("Connection", "close")
            self.close_connection = True
            self.end_headers()
            self.wfile.write(data)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if not length:
                return {}
            try:
                return json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError:
                return {}

        def do_GET(self):
            if self.path == "/api/machine":
                self._send(service.machine_payload())
            elif self.path == "/api/state":
                self._send(service.state_payload())
            elif self.path == "/api/trace":
                self._send(service.trace_payload())
            else:
                self._static()

        def do_POST(self):
            if self.path == "/api/fire":
                payload, status = service.fire(self._body())
            elif self.path == "/api/undo":
                payload, status = service.undo()
            elif self.path == "/api/reset":
                payload, status = service.reset()
            elif self.path == "/api/scenario/run":
                payload, status = service.run_scenario(self._body())
            else:
                payload, status = {"error": "NotFound"}, 404
            self._send(payload, status)

        def _static(self):
            path = self.path.split("?", 1)[0]
            if path in ("", "/"):
                path = "/index.html"
            if service.ui_dir is not None:
                target = (service.ui_dir / path.lstrip("/")).resolve()
                if (target.is_file()
                        and str(target).startswith(str(service.ui_dir.resolve()))):
                    ctype = {
                        ".html": "text/html", ".js": "text/javascript",
                        ".css": "text/css", ".json": "application/json",
                        ".map": "application/json", ".svg": "image/svg+xml",
                    }.get(target.suffix, "application/octet-stream")
                    self._send(target.read_bytes(), 200, ctype)
                    return
            if path == "/index.html":
                self._send(_FALLBACK_PAGE.encode(), 200, "text/html")
            else:
                self._send({"error": "NotFound"}, 404)

    return Handler


def make_server(service: AnimatorService, port: int = 7077,
                host: str = "127.0.0.1") -> HTTPServer:
    """Binds the (sequential) HTTP server; port 0 asks the OS for a port.
    Raises OSError if the port is unavailable."""
    return HTTPServer((host, port), _make_handler(service))
