"""HTTP API routes, status codes, authorization and asset serving."""

import json
import urllib.error
import urllib.request
from collections import namedtuple

import pytest

from gridspace.analysis import heatmap_to_json_obj
from gridspace.config import ServiceConfig
from gridspace.fdir import topology_to_json_obj
from gridspace.invariants import (
    BigAnd,
    Implies,
    OccupyBox,
    OccupyPoint,
    Owner,
    Quantity,
    TimeInterval,
)
from gridspace.httpapi import start_server, stop_server
from gridspace.reasoning import TimeWindow
from gridspace.rules import rule_to_json_obj
from gridspace.serialization import parse_json, parse_xml

Response = namedtuple("Response", "status body content_type")


def request(method, url, body=None, headers=None, timeout=10):
    if isinstance(body, (dict, list)):
        body = json.dumps(body)
    data = body.encode("utf-8") if isinstance(body, str) else body
    req = urllib.request.Request(url, data=data, method=method)
    for key, value in (headers or {}).items():
        req.add_header(key, value)
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return Response(resp.status, resp.read(), resp.headers.get("Content-Type"))
    except urllib.error.HTTPError as err:
        return Response(err.code, err.read(), err.headers.get("Content-Type"))


def request_json(method, url, body=None, headers=None):
    resp = request(method, url, body, headers)
    decoded = json.loads(resp.body) if resp.body else None
    return resp.status, decoded


def probe_rule_doc(rule_id="probe"):
    return {
        "id": rule_id,
        "priority": 9,
        "window": {"t1": 0, "t2": 0},
        "areas": [{"x1": 0, "y1": 0, "x2": 3, "y2": 3}],
        "owner": "cloud",
        "metric": "covered_cells",
        "threshold": 1,
        "stakeholders": ["operator"],
        "reaction": {"displays": [{"kind": "text-alert", "text": "covered"}]},
    }


class TestHealthAndRouting:
    def test_healthz(self, live_server):
        base, service = live_server
        status, obj = request_json("GET", f"{base}/healthz")
        assert status == 200
        assert obj == {"status": "ok", "revision": 0, "rules": 1, "lastAlertSeq": 0}

    def test_unknown_route(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/nope")
        assert status == 404
        assert obj["error"] == "not_found"

    def test_trailing_slash_is_tolerated(self, live_server):
        base, _ = live_server
        status, _ = request_json("GET", f"{base}/rules/")
        assert status == 200

    def test_detached_server_answers_503(self, make_service):
        service = make_service(config=ServiceConfig(port=0))
        server = start_server(service)
        host, port = server.server_address[:2]
        try:
            server.detach()
            status, obj = request_json("GET", f"http://{host}:{port}/healthz")
            assert status == 503
            assert obj["error"] == "unavailable"
        finally:
            stop_server(server)


class TestRuleRoutes:
    def test_list_rules(self, live_server, demo_rule):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/rules")
        assert status == 200
        assert obj == [rule_to_json_obj(demo_rule)]

    def test_get_rule(self, live_server, demo_rule):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/rules/pv-cloud-cover")
        assert status == 200
        assert obj == rule_to_json_obj(demo_rule)

    def test_get_unknown_rule(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/rules/ghost")
        assert status == 404
        assert obj["error"] == "unknown_id"

    def test_put_creates_then_replaces(self, live_server):
        base, service = live_server
        doc = probe_rule_doc()
        status, _ = request_json("PUT", f"{base}/rules/probe", doc)
        assert status == 201
        doc["priority"] = 3
        status, obj = request_json("PUT", f"{base}/rules/probe", doc)
        assert status == 200
        assert obj["priority"] == 3
        assert service.rules.get("probe").priority == 3

    def test_put_id_must_match_path(self, live_server):
        base, _ = live_server
        status, obj = request_json("PUT", f"{base}/rules/other", probe_rule_doc())
        assert status == 400
        assert obj["error"] == "validation"

    def test_put_rejects_bad_json(self, live_server):
        base, _ = live_server
        status, obj = request_json("PUT", f"{base}/rules/probe", "nonsense{")
        assert status == 400
        assert obj["error"] == "validation"

    def test_put_rejects_invalid_rules(self, live_server):
        base, _ = live_server
        doc = probe_rule_doc()
        doc["metric"] = "vibes"
        status, obj = request_json("PUT", f"{base}/rules/probe", doc)
        assert status == 400
        assert obj["error"] == "validation"

    def test_post_creates_once(self, live_server):
        base, _ = live_server
        status, _ = request_json("POST", f"{base}/rules", probe_rule_doc())
        assert status == 201
        status, obj = request_json("POST", f"{base}/rules", probe_rule_doc())
        assert status == 409
        assert obj["error"] == "duplicate"

    def test_delete_rule(self, live_server):
        base, service = live_server
        resp = request("DELETE", f"{base}/rules/pv-cloud-cover")
        assert resp.status == 204
        assert resp.body == b""
        assert len(service.rules) == 0
        status, obj = request_json("DELETE", f"{base}/rules/pv-cloud-cover")
        assert status == 404
        assert obj["error"] == "unknown_id"


class TestFrameRoutes:
    def test_post_frames_runs_the_pipeline(self, live_server, demo_frames_path):
        base, service = live_server
        text = demo_frames_path.read_text(encoding="utf-8")
        status, obj = request_json("POST", f"{base}/frames", text)
        assert status == 200
        assert obj["accepted"] == 3
        assert obj["duplicates"] == 0
        assert obj["revision"] == 3
        assert len(obj["alerts"]) == 1
        assert obj["alerts"][0]["ruleId"] == "pv-cloud-cover"
        assert obj["alerts"][0]["firedAt"] == 120

        status, obj = request_json("POST", f"{base}/frames", text)
        assert status == 200
        assert obj["accepted"] == 0
        assert obj["duplicates"] == 3
        assert obj["revision"] == 3
        assert obj["alerts"] == []

    def test_post_frames_rejects_garbage(self, live_server):
        base, _ = live_server
        status, obj = request_json("POST", f"{base}/frames", "not a frame\n")
        assert status == 400
        assert obj["error"] == "validation"

    def test_post_frames_requires_content(self, live_server):
        base, _ = live_server
        status, obj = request_json("POST", f"{base}/frames", "")
        assert status == 400
        assert "no frames" in obj["message"]


class TestModelRoutes:
    def test_model_as_json(self, live_server, demo_frames):
        base, service = live_server
        service.handle_frame(demo_frames[1])
        resp = request("GET", f"{base}/model?format=json")
        assert resp.status == 200
        assert resp.content_type == "application/json"
        assert parse_json(resp.body.decode("utf-8")) == service.model()

    def test_model_as_xml(self, live_server, demo_frames):
        base, service = live_server
        service.handle_frame(demo_frames[1])
        resp = request("GET", f"{base}/model?format=xml")
        assert resp.status == 200
        assert resp.content_type == "application/xml"
        assert parse_xml(resp.body.decode("utf-8")) == service.model()

    def test_model_rejects_other_formats(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/model?format=yaml")
        assert status == 400
        assert obj["error"] == "validation"


class TestAlertRoutes:
    def test_alerts_and_since_filter(self, live_server, demo_frames_path):
        base, _ = live_server
        request_json(
            "POST", f"{base}/frames", demo_frames_path.read_text(encoding="utf-8")
        )
        status, obj = request_json("GET", f"{base}/alerts")
        assert status == 200
        assert obj["lastSeq"] == 1
        assert [a["firedAt"] for a in obj["alerts"]] == [120]

        status, obj = request_json("GET", f"{base}/alerts?since=121")
        assert status == 200
        assert obj["alerts"] == []
        assert obj["lastSeq"] == 1

    def test_alerts_since_must_be_numeric(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/alerts?since=noon")
        assert status == 400
        assert obj["error"] == "validation"

    def test_stream_returns_existing_entries_immediately(
        self, live_server, demo_frames_path
    ):
        base, _ = live_server
        request_json(
            "POST", f"{base}/frames", demo_frames_path.read_text(encoding="utf-8")
        )
        status, obj = request_json("GET", f"{base}/alerts/stream?seq=0&timeout=5")
        assert status == 200
        assert [a["seq"] for a in obj["alerts"]] == [1]

    def test_stream_times_out_empty(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/alerts/stream?seq=0&timeout=0.05")
        assert status == 200
        assert obj["alerts"] == []
        assert obj["lastSeq"] == 0

    def test_stream_rejects_bad_numbers(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/alerts/stream?seq=first")
        assert status == 400
        assert obj["error"] == "validation"


class TestHeatmapRoute:
    def test_heatmap_round_trip(self, live_server):
        base, service = live_server
        clause = Implies(
            BigAnd((TimeInterval(0, 10), Owner("site"))),
            BigAnd((Quantity("load_kw", "5", "kW"), OccupyPoint(1, 1))),
        )
        service.handle_model(clause)
        status, obj = request_json(
            "GET", f"{base}/heatmap?region=0,0,3,3&t1=0&t2=10&cell=2"
        )
        assert status == 200
        expected = service.heatmap(OccupyBox(0, 0, 3, 3), TimeWindow(0, 10), 2)
        assert obj == heatmap_to_json_obj(expected)
        assert obj["missing_quantities"] is False

    @pytest.mark.parametrize(
        "query",
        [
            "t1=0&t2=10&cell=2",
            "region=0,0,3&t1=0&t2=10&cell=2",
            "region=0,0,3,3&t1=ten&t2=10&cell=2",
            "region=0,0,3,3&t1=0&t2=10&cell=0",
            "region=0,0,3,3&t1=0&t2=10&cell=2&aggregate=median",
            "region=0,0,3,3&t1=10&t2=0&cell=2",
        ],
    )
    def test_heatmap_rejects_bad_queries(self, live_server, query):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/heatmap?{query}")
        assert status == 400
        assert obj["error"] == "validation"


class TestFdirRoutes:
    def test_state_starts_empty(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/fdir/state")
        assert status == 200
        assert obj == {"topology": None, "report": None}

    def test_scenario_round_trip(self, live_server, two_feeder, feeder_events):
        base, _ = live_server
        body = {"topology": topology_to_json_obj(two_feeder), "events": feeder_events}
        status, obj = request_json("POST", f"{base}/fdir/scenario", body)
        assert status == 200
        assert len(obj["steps"]) == 3
        assert obj["steps"][0]["opened"] == ["swA", "swB"]
        assert obj["report"]["saidi_minutes"] == 0.0
        assert obj["final"] == topology_to_json_obj(two_feeder)

        status, obj = request_json("GET", f"{base}/fdir/state")
        assert status == 200
        assert obj["topology"] == topology_to_json_obj(two_feeder)
        assert obj["report"]["saidi_minutes"] == 0.0

    @pytest.mark.parametrize(
        "body",
        [
            "nonsense{",
            {"events": []},
            {"topology": {"nodes": [], "edges": []}},
            {"topology": {"nodes": [], "edges": []}, "events": "fault"},
            {
                "topology": {"nodes": [], "edges": []},
                "events": [{"type": "fault", "edge": "ghost"}],
            },
        ],
    )
    def test_scenario_rejects_bad_bodies(self, live_server, body):
        base, _ = live_server
        status, obj = request_json("POST", f"{base}/fdir/scenario", body)
        assert status == 400
        assert obj["error"] == "validation"


class TestAuthorization:
    @pytest.fixture
    def guarded(self, make_service):
        service = make_service(config=ServiceConfig(port=0, token="sesame"))
        server = start_server(service)
        host, port = server.server_address[:2]
        try:
            yield f"http://{host}:{port}"
        finally:
            stop_server(server)

    def test_missing_token_is_rejected(self, guarded):
        status, obj = request_json("GET", f"{guarded}/rules")
        assert status == 401
        assert obj["error"] == "unauthorized"

    def test_wrong_token_is_rejected(self, guarded):
        status, _ = request_json(
            "GET", f"{guarded}/rules", headers={"Authorization": "Bearer guess"}
        )
        assert status == 401

    def test_bearer_token_unlocks(self, guarded):
        status, obj = request_json(
            "GET", f"{guarded}/rules", headers={"Authorization": "Bearer sesame"}
        )
        assert status == 200
        assert obj == []

    def test_health_probe_is_exempt(self, guarded):
        status, obj = request_json("GET", f"{guarded}/healthz")
        assert status == 200
        assert obj["status"] == "ok"


class TestConsoleAssets:
    @pytest.fixture
    def console(self, make_service, tmp_path):
        (tmp_path / "index.html").write_text("<h1>console</h1>", encoding="utf-8")
        (tmp_path / "app.js").write_text("console.log(1)", encoding="utf-8")
        service = make_service(config=ServiceConfig(port=0, ui_dir=str(tmp_path)))
        server = start_server(service)
        host, port = server.server_address[:2]
        try:
            yield f"http://{host}:{port}"
        finally:
            stop_server(server)

    def test_index_is_served(self, console):
        resp = request("GET", f"{console}/ui")
        assert resp.status == 200
        assert resp.body == b"<h1>console</h1>"
        assert resp.content_type.startswith("text/html")

    def test_assets_resolve_by_name(self, console):
        resp = request("GET", f"{console}/ui/app.js")
        assert resp.status == 200
        assert resp.body == b"console.log(1)"

    def test_missing_asset(self, console):
        status, obj = request_json("GET", f"{console}/ui/ghost.css")
        assert status == 404
        assert obj["error"] == "not_found"

    def test_traversal_is_blocked(self, console):
        resp = request("GET", f"{console}/ui/%2e%2e/secret.txt")
        assert resp.status == 404

    def test_no_console_configured(self, live_server):
        base, _ = live_server
        status, obj = request_json("GET", f"{base}/ui")
        assert status == 404
        assert obj["error"] == "not_found"
