"""HTTP front end for the decision service, on the standard library server.

JSON in and out unless noted: frames post as text, the model can come back
as XML, static console assets are served under /ui.  Handlers are
read-mostly; writes funnel through the service's single writer lock.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .analysis import heatmap_to_json_obj
from .config import ServiceConfig
from .errors import (
    DomainError,
    DuplicateId,
    GridspaceError,
    ParseError,
    RuleParseError,
    UnknownId,
)
from .fdir import parse_topology, topology_to_json_obj
from .ingestion import parse_frames
from .invariants import OccupyBox
from .reasoning import TimeWindow
from .rules import parse_rule, rule_to_json_obj
from .serialization import serialize_json, serialize_xml
from .service import DecisionService

log = logging.getLogger(__name__)

MAX_BODY = 16 * 1024 * 1024
STREAM_DEFAULT_TIMEOUT = 25.0
STREAM_MAX_TIMEOUT = 60.0


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(
        self,
        address: tuple[str, int],
        service: DecisionService,
        ui_dir: str | None = None,
    ) -> None:
        super().__init__(address, ApiHandler)
        self.service: DecisionService | None = service
        self.ui_dir = ui_dir

    def detach(self) -> None:
        """Stop serving application state; requests answer 503 afterwards."""
        self.service = None


def _problem(code: str, message: str) -> dict:
    return {"error": code, "message": message}


class ApiHandler(BaseHTTPRequestHandler):
    server_version = "gridspace"
    protocol_version = "HTTP/1.1"

    # Plumbing

    def log_message(self, format: str, *args) -> None:
        log.debug("%s " + format, self.address_string(), *args)

    def _send(self, status: int, payload: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, obj: object) -> None:
        body = json.dumps(obj).encode("utf-8")
        self._send(status, body, "application/json")

    def _send_empty(self, status: int) -> None:
        self.send_response(status)
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _fail(self, status: int, code: str, message: str) -> None:
        self._send_json(status, _problem(code, message))

    def _read_body(self) -> bytes | None:
        length = self.headers.get("Content-Length")
        if length is None:
            self._fail(400, "validation", "Content-Length required")
            return None
        try:
            n = int(length)
        except ValueError:
            self._fail(400, "validation", "bad Content-Length")
            return None
        if n < 0 or n > MAX_BODY:
            self._fail(400, "validation", "body too large")
            return None
        return self.rfile.read(n)

    def _service(self) -> DecisionService | None:
        service = self.server.service  # type: ignore[attr-defined]
        if service is None:
            self._fail(503, "unavailable", "service is shutting down")
        return service

    def _authorized(self, service: DecisionService, path: str) -> bool:
        token = service.config.token
        if token is None or path == "/healthz":
            return True
        header = self.headers.get("Authorization", "")
        if header == f"Bearer {token}":
            return True
        self._fail(401, "unauthorized", "missing or invalid bearer token")
        return False

    def _dispatch(self, method: str) -> None:
        split = urlsplit(self.path)
        path = split.path.rstrip("/") or "/"
        query = parse_qs(split.query)
        service = self._service()
        if service is None:
            return
        if not self._authorized(service, path):
            return
        try:
            self._route(method, path, query, service)
        except BrokenPipeError:
            pass
        except Exception as exc:
            log.exception("unhandled API error for %s %s", method, path)
            try:
                self._fail(500, "internal", str(exc))
            except Exception:
                pass

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_PUT(self) -> None:
        self._dispatch("PUT")

    def do_DELETE(self) -> None:
        self._dispatch("DELETE")

    # Routing

    def _route(self, method: str, path: str, query: dict, service: DecisionService) -> None:
        if path == "/healthz" and method == "GET":
            return self._healthz(service)
        if path == "/rules":
            if method == "GET":
                return self._list_rules(service)
            if method == "POST":
                return self._create_rule(service)
        if path.startswith("/rules/"):
            rule_id = path[len("/rules/"):]
            if "/" not in rule_id and rule_id:
                if method == "GET":
                    return self._get_rule(service, rule_id)
                if method == "PUT":
                    return self._put_rule(service, rule_id)
                if method == "DELETE":
                    return self._delete_rule(service, rule_id)
        if path == "/frames" and method == "POST":
            return self._post_frames(service)
        if path == "/model" and method == "GET":
            return self._get_model(service, query)
        if path == "/alerts" and method == "GET":
            return self._get_alerts(service, query)
        if path == "/alerts/stream" and method == "GET":
            return self._stream_alerts(service, query)
        if path == "/heatmap" and method == "GET":
            return self._get_heatmap(service, query)
        if path == "/fdir/scenario" and method == "POST":
            return self._post_scenario(service)
        if path == "/fdir/state" and method == "GET":
            return self._get_fdir_state(service)
        if path == "/ui" or path.startswith("/ui/"):
            if method == "GET":
                return self._serve_ui(path)
        self._fail(404, "not_found", f"no route for {method} {path}")

    # Handlers

    def _healthz(self, service: DecisionService) -> None:
        self._send_json(
            200,
            {
                "status": "ok",
                "revision": service.revision(),
                "rules": len(service.rules),
                "lastAlertSeq": service.alerts.last_seq,
            },
        )

    def _list_rules(self, service: DecisionService) -> None:
        self._send_json(200, [rule_to_json_obj(r) for r in service.rules])

    def _get_rule(self, service: DecisionService, rule_id: str) -> None:
        rule = service.rules.get(rule_id)
        if rule is None:
            return self._fail(404, "unknown_id", f"no rule {rule_id!r}")
        self._send_json(200, rule_to_json_obj(rule))

    def _parse_rule_body(self) -> object | None:
        body = self._read_body()
        if body is None:
            return None
        try:
            return json.loads(body)
        except json.JSONDecodeError as exc:
            self._fail(400, "validation", f"invalid JSON body: {exc}")
            return None

    def _put_rule(self, service: DecisionService, rule_id: str) -> None:
        obj = self._parse_rule_body()
        if obj is None:
            return
        try:
            rule = parse_rule(obj)
        except RuleParseError as exc:
            return self._fail(400, "validation", str(exc))
        if rule.id != rule_id:
            return self._fail(400, "validation", "rule id does not match the path")
        created = service.put_rule(rule)
        self._send_json(201 if created else 200, rule_to_json_obj(rule))

    def _create_rule(self, service: DecisionService) -> None:
        obj = self._parse_rule_body()
        if obj is None:
            return
        try:
            rule = parse_rule(obj)
        except RuleParseError as exc:
            return self._fail(400, "validation", str(exc))
        try:
            service.put_rule(rule, create_only=True)
        except DuplicateId as exc:
            return self._fail(409, "duplicate", str(exc))
        self._send_json(201, rule_to_json_obj(rule))

    def _delete_rule(self, service: DecisionService, rule_id: str) -> None:
        try:
            service.delete_rule(rule_id)
        except UnknownId as exc:
            return self._fail(404, "unknown_id", str(exc))
        self._send_empty(204)

    def _post_frames(self, service: DecisionService) -> None:
        body = self._read_body()
        if body is None:
            return
        try:
            frames = parse_frames(body.decode("utf-8", errors="replace"))
        except GridspaceError as exc:
            return self._fail(400, "validation", str(exc))
        if not frames:
            return self._fail(400, "validation", "no frames in body")
        accepted = 0
        duplicates = 0
        alerts: list[dict] = []
        revision = service.revision()
        for frame in frames:
            outcome = service.handle_frame(frame)
            revision = outcome.revision
            if outcome.inserted:
                accepted += 1
            else:
                duplicates += 1
            alerts.extend(outcome.alerts)
        self._send_json(
            200,
            {
                "accepted": accepted,
                "duplicates": duplicates,
                "revision": revision,
                "alerts": alerts,
            },
        )

    def _get_model(self, service: DecisionService, query: dict) -> None:
        fmt = query.get("format", ["json"])[0]
        model = service.model()
        if fmt == "json":
            return self._send(200, serialize_json(model).encode("utf-8"), "application/json")
        if fmt == "xml":
            return self._send(200, serialize_xml(model).encode("utf-8"), "application/xml")
        self._fail(400, "validation", "format must be json or xml")

    def _get_alerts(self, service: DecisionService, query: dict) -> None:
        since = None
        if "since" in query:
            try:
                since = int(query["since"][0])
            except ValueError:
                return self._fail(400, "validation", "since must be an integer tick")
        entries = service.alerts.since_fired(since)
        self._send_json(200, {"alerts": entries, "lastSeq": service.alerts.last_seq})

    def _stream_alerts(self, service: DecisionService, query: dict) -> None:
        try:
            seq = int(query.get("seq", ["0"])[0])
            timeout = float(query.get("timeout", [str(STREAM_DEFAULT_TIMEOUT)])[0])
        except ValueError:
            return self._fail(400, "validation", "seq and timeout must be numbers")
        timeout = max(0.0, min(timeout, STREAM_MAX_TIMEOUT))
        entries = service.alerts.wait_since(seq, timeout)
        self._send_json(200, {"alerts": entries, "lastSeq": service.alerts.last_seq})

    def _get_heatmap(self, service: DecisionService, query: dict) -> None:
        try:
            region_raw = query["region"][0]
            parts = [int(p) for p in region_raw.split(",")]
            if len(parts) != 4:
                raise ValueError("region needs four integers")
            region = OccupyBox(*parts)
            t1 = int(query["t1"][0])
            t2 = int(query["t2"][0])
            cell = int(query["cell"][0])
            aggregate = query.get("aggregate", ["max"])[0]
            window = TimeWindow(t1, t2)
        except (KeyError, ValueError) as exc:
            return self._fail(400, "validation", f"bad heatmap query: {exc}")
        try:
            hm = service.heatmap(region, window, cell, aggregate)
        except (DomainError, GridspaceError) as exc:
            return self._fail(400, "validation", str(exc))
        self._send_json(200, heatmap_to_json_obj(hm))

    def _post_scenario(self, service: DecisionService) -> None:
        body = self._read_body()
        if body is None:
            return
        try:
            doc = json.loads(body)
        except json.JSONDecodeError as exc:
            return self._fail(400, "validation", f"invalid JSON body: {exc}")
        if not isinstance(doc, dict) or "topology" not in doc or "events" not in doc:
            return self._fail(400, "validation", "body needs topology and events")
        events = doc["events"]
        if not isinstance(events, list):
            return self._fail(400, "validation", "events must be an array")
        try:
            topo = parse_topology(doc["topology"])
            result = service.run_fdir_scenario(topo, events)
        except (GridspaceError, ValueError, KeyError, TypeError) as exc:
            return self._fail(400, "validation", f"scenario failed: {exc}")
        self._send_json(
            200,
            {
                "steps": [s.to_json_obj() for s in result.steps],
                "report": result.report.to_json_obj(),
                "final": topology_to_json_obj(result.final),
            },
        )

    def _get_fdir_state(self, service: DecisionService) -> None:
        state = service.fdir
        if state.topology is None:
            return self._send_json(200, {"topology": None, "report": None})
        report = state.result.report.to_json_obj() if state.result else None
        self._send_json(
            200,
            {"topology": topology_to_json_obj(state.topology), "report": report},
        )

    def _serve_ui(self, path: str) -> None:
        ui_dir = self.server.ui_dir  # type: ignore[attr-defined]
        if ui_dir is None:
            return self._fail(404, "not_found", "no console assets configured")
        rel = path[len("/ui"):].lstrip("/") or "index.html"
        parts = [p for p in rel.split("/") if p]
        if any(p in ("..", "") or p.startswith(".") for p in parts):
            return self._fail(404, "not_found", "no such asset")
        base = Path(ui_dir).resolve()
        target = base.joinpath(*parts).resolve()
        if base not in target.parents and target != base:
            return self._fail(404, "not_found", "no such asset")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._fail(404, "not_found", "no such asset")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self._send(200, target.read_bytes(), ctype)


def start_server(service: DecisionService, config: ServiceConfig | None = None) -> ApiServer:
    """Bind and serve in a daemon thread; returns the running server.

    Port 0 picks a free port; read it back from ``server.server_address``.
    """
    cfg = config or service.config
    server = ApiServer((cfg.host, cfg.port), service, ui_dir=cfg.ui_dir)
    thread = threading.Thread(target=server.serve_forever, name="gridspace-http", daemon=True)
    thread.start()
    return server


def stop_server(server: ApiServer) -> None:
    server.detach()
    server.shutdown()
    server.server_close()
