"""Decision service orchestration: alert log, frame pipeline, configuration."""

import threading
import time

import pytest

from gridspace.config import ENV_CONFIG, ServiceConfig, config_from_obj, load_config
from gridspace.errors import DomainError, DuplicateId, UnknownId
from gridspace.invariants import (
    TRUE,
    BigAnd,
    Implies,
    OccupyBox,
    OccupyPoint,
    Owner,
    Quantity,
    TimeInterval,
)
from gridspace.analysis import weak_link_heatmap
from gridspace.reactions import render_reaction
from gridspace.reasoning import TimeWindow
from gridspace.rules import evaluate_rule, parse_rule
from gridspace.service import AlertLog, DecisionService, trigger_to_json_obj

ALERT_KEYS = {
    "seq",
    "ruleId",
    "firedAt",
    "severity",
    "priority",
    "stakeholders",
    "perArea",
    "xml",
}


def record(rule_id="r", fired_at=0):
    return {"ruleId": rule_id, "firedAt": fired_at}


class TestAlertLog:
    def test_capacity_must_be_positive(self):
        with pytest.raises(ValueError):
            AlertLog(0)

    def test_sequence_numbers_start_at_one(self):
        log = AlertLog(10)
        stamped = log.append([record(fired_at=5), record(fired_at=6)])
        assert [e["seq"] for e in stamped] == [1, 2]
        assert log.last_seq == 2

    def test_append_nothing(self):
        log = AlertLog(10)
        assert log.append([]) == []
        assert log.last_seq == 0

    def test_eviction_keeps_the_newest(self):
        log = AlertLog(2)
        for t in range(3):
            log.append([record(fired_at=t)])
        assert [e["seq"] for e in log.since(0)] == [2, 3]
        assert log.last_seq == 3

    def test_since_cursor(self):
        log = AlertLog(10)
        log.append([record(fired_at=0), record(fired_at=1), record(fired_at=2)])
        assert [e["seq"] for e in log.since(1)] == [2, 3]
        assert log.since(3) == []

    def test_since_fired_filters_by_tick(self):
        log = AlertLog(10)
        log.append([record(fired_at=0), record(fired_at=60), record(fired_at=120)])
        assert len(log.since_fired()) == 3
        assert [e["firedAt"] for e in log.since_fired(60)] == [60, 120]

    def test_wait_since_returns_immediately_when_satisfied(self):
        log = AlertLog(10)
        log.append([record()])
        start = time.monotonic()
        entries = log.wait_since(0, timeout=5.0)
        assert len(entries) == 1
        assert time.monotonic() - start < 1.0

    def test_wait_since_wakes_on_append(self):
        log = AlertLog(10)

        def feed():
            time.sleep(0.05)
            log.append([record(fired_at=9)])

        thread = threading.Thread(target=feed)
        thread.start()
        entries = log.wait_since(0, timeout=5.0)
        thread.join()
        assert [e["firedAt"] for e in entries] == [9]

    def test_wait_since_times_out_empty(self):
        log = AlertLog(10)
        assert log.wait_since(0, timeout=0.01) == []


class TestFramePipeline:
    def test_demo_run_raises_exactly_one_alert(self, make_service, demo_rule, demo_frames):
        service = make_service(rules=[demo_rule])
        outcomes = [service.handle_frame(f) for f in demo_frames]
        assert [o.inserted for o in outcomes] == [True, True, True]
        assert [o.revision for o in outcomes] == [1, 2, 3]
        assert [len(o.alerts) for o in outcomes] == [0, 0, 1]

        alert = outcomes[2].alerts[0]
        assert set(alert) == ALERT_KEYS
        assert alert["seq"] == 1
        assert alert["ruleId"] == "pv-cloud-cover"
        assert alert["firedAt"] == 120
        assert alert["severity"] == "critical solar energy level"
        assert alert["priority"] == 1
        assert alert["stakeholders"] == ["operator"]
        assert alert["perArea"] == [
            {"x1": 0, "y1": 0, "x2": 7, "y2": 7, "measured": 16.0}
        ]
        assert service.alerts.since_fired() == [alert]

    def test_alert_xml_matches_the_renderer(self, make_service, demo_rule, demo_frames):
        service = make_service(rules=[demo_rule])
        outcome = [service.handle_frame(f) for f in demo_frames][2]
        trigger = outcome.triggers[0]
        assert outcome.alerts[0]["xml"] == render_reaction(trigger, demo_rule).xml

    def test_duplicate_frame_is_dropped_without_evaluation(
        self, make_service, demo_rule, demo_frames
    ):
        service = make_service(rules=[demo_rule])
        for frame in demo_frames:
            service.handle_frame(frame)
        again = service.handle_frame(demo_frames[2])
        assert again.inserted is False
        assert again.revision == 3
        assert again.triggers == ()
        assert again.alerts == ()
        assert service.alerts.last_seq == 1

    def test_evaluation_matches_the_full_model(self, make_service, demo_rule, demo_frames):
        service = make_service(rules=[demo_rule])
        for frame in demo_frames:
            service.handle_frame(frame)
        triggers, errors = service.evaluate_at(120)
        assert errors == ()
        assert triggers == (evaluate_rule(demo_rule, service.model(), 120),)

    def test_handle_model_inserts_without_evaluating(self, make_service, demo_rule):
        service = make_service(rules=[demo_rule])
        patch = Implies(
            BigAnd((TimeInterval(100, 200), Owner("cloud"))),
            BigAnd(tuple(OccupyPoint(x, y) for x in range(4) for y in range(4))),
        )
        assert service.handle_model(patch) == 1
        assert service.alerts.last_seq == 0
        triggers, _ = service.evaluate_at(150)
        assert len(triggers) == 1

    def test_snapshot_taken_before_ingest_stays_empty(self, make_service, demo_frames):
        service = make_service()
        before = service.model()
        service.handle_frame(demo_frames[2])
        assert before == TRUE
        assert service.model() != TRUE

    def test_trigger_json_shape(self, make_service, demo_rule, demo_frames):
        service = make_service(rules=[demo_rule])
        outcome = [service.handle_frame(f) for f in demo_frames][2]
        obj = trigger_to_json_obj(outcome.triggers[0], 7, ("a", "b"))
        assert obj["priority"] == 7
        assert obj["stakeholders"] == ["a", "b"]
        assert obj["perArea"][0]["measured"] == 16.0


class TestRuleManagement:
    def test_put_rule_reports_creation(self, make_service, demo_rule):
        service = make_service()
        assert service.put_rule(demo_rule) is True
        assert service.put_rule(demo_rule) is False
        assert len(service.rules) == 1

    def test_create_only_conflicts(self, make_service, demo_rule):
        service = make_service(rules=[demo_rule])
        with pytest.raises(DuplicateId):
            service.put_rule(demo_rule, create_only=True)

    def test_delete_rule(self, make_service, demo_rule):
        service = make_service(rules=[demo_rule])
        service.delete_rule("pv-cloud-cover")
        assert len(service.rules) == 0
        with pytest.raises(UnknownId):
            service.delete_rule("pv-cloud-cover")

    def test_watcher_callback_swallows_bad_mutations(self, make_service):
        service = make_service()
        service.apply_rule_op("remove", rule=None, rule_id="ghost")
        assert len(service.rules) == 0

    def test_rules_from_a_directory_survive_restart_alerts_do_not(
        self, demo_rules_dir, demo_frames, make_service
    ):
        from gridspace.rules import load_rules

        first = DecisionService(ServiceConfig(), load_rules(demo_rules_dir))
        for frame in demo_frames:
            first.handle_frame(frame)
        assert first.alerts.last_seq == 1

        restarted = DecisionService(ServiceConfig(), load_rules(demo_rules_dir))
        assert restarted.rules.get("pv-cloud-cover") is not None
        assert restarted.alerts.last_seq == 0
        assert restarted.alerts.since_fired() == []


class TestDelivery:
    def test_fired_docs_are_routed_to_endpoints(self, demo_rule, demo_frames):
        posts = []
        config = ServiceConfig(endpoints={"operator": "https://ops.example/hook"})
        service = DecisionService(config, None, post=lambda url, doc: posts.append((url, doc)))
        service.put_rule(demo_rule)
        outcomes = [service.handle_frame(f) for f in demo_frames]
        deliveries = outcomes[2].deliveries
        assert [(d.stakeholder, d.status, d.attempts) for d in deliveries] == [
            ("operator", "delivered", 1)
        ]
        assert posts[0][0] == "https://ops.example/hook"
        assert posts[0][1].idempotency_key == "pv-cloud-cover:120"

    def test_no_endpoints_means_no_routing(self, make_service, demo_rule, demo_frames):
        service = make_service(rules=[demo_rule])
        outcomes = [service.handle_frame(f) for f in demo_frames]
        assert outcomes[2].deliveries == ()


class TestFdirState:
    def test_starts_empty(self, make_service):
        service = make_service()
        assert service.fdir.topology is None
        assert service.fdir.result is None

    def test_scenario_updates_the_held_state(self, make_service, two_feeder, feeder_events):
        service = make_service()
        result = service.run_fdir_scenario(two_feeder, feeder_events)
        assert service.fdir.result is result
        assert service.fdir.topology == result.final
        assert result.report.saidi_minutes == 0.0


class TestHeatmapQuery:
    def test_matches_direct_computation(self, make_service):
        service = make_service()
        clause = Implies(
            BigAnd((TimeInterval(0, 10), Owner("site"))),
            BigAnd((Quantity("load_kw", "5", "kW"), OccupyPoint(1, 1))),
        )
        service.handle_model(clause)
        region = OccupyBox(0, 0, 3, 3)
        window = TimeWindow(0, 10)
        via_service = service.heatmap(region, window, 2)
        direct = weak_link_heatmap(service.model(), region, window, 2)
        assert via_service == direct
        assert via_service.missing_quantities is False


class TestConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv(ENV_CONFIG, raising=False)
        cfg = load_config(None)
        assert cfg == ServiceConfig()
        assert cfg.port == 8321
        assert cfg.owner_tag == "cloud"
        assert cfg.deliver is False
        assert cfg.token is None

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "svc.toml"
        path.write_text(
            "\n".join(
                [
                    'host = "0.0.0.0"',
                    "port = 9000",
                    'owner_tag = "storm"',
                    "retention = 7200",
                    "[endpoints]",
                    'operator = "https://ops.example/hook"',
                    "[[sources]]",
                    'kind = "file-replay"',
                    'uri = "frames.txt"',
                    "poll_interval = 5",
                ]
            ),
            encoding="utf-8",
        )
        cfg = load_config(str(path))
        assert cfg.host == "0.0.0.0"
        assert cfg.port == 9000
        assert cfg.owner_tag == "storm"
        assert cfg.retention == 7200
        assert cfg.endpoints == {"operator": "https://ops.example/hook"}
        assert len(cfg.sources) == 1
        assert cfg.sources[0].kind == "file-replay"
        assert cfg.sources[0].poll_interval == 5

    def test_environment_fallback(self, tmp_path, monkeypatch):
        path = tmp_path / "svc.toml"
        path.write_text("port = 9100\n", encoding="utf-8")
        monkeypatch.setenv(ENV_CONFIG, str(path))
        assert load_config(None).port == 9100

    @pytest.mark.parametrize(
        "obj",
        [
            {"mystery": 1},
            {"port": "eight"},
            {"port": 0},
            {"port": 70000},
            {"retention": 0},
            {"alert_capacity": 0},
            {"rules_poll_seconds": 0},
            {"max_attempts": 0},
            {"in_flight": 0},
            {"intensity_threshold": 300},
            {"deliver": 1},
            {"endpoints": {"ops": 5}},
            {"sources": [{"kind": "carrier-pigeon", "uri": "x"}]},
            {"sources": [{"kind": "file-replay", "uri": "x", "extra": True}]},
            {"sources": ["not-a-table"]},
        ],
    )
    def test_rejected_configs(self, obj):
        with pytest.raises(DomainError):
            config_from_obj(obj)

    def test_invalid_toml_is_a_domain_error(self, tmp_path):
        path = tmp_path / "svc.toml"
        path.write_text("port = = 1\n", encoding="utf-8")
        with pytest.raises(DomainError):
            load_config(str(path))
