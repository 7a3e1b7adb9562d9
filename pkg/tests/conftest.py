import contextlib
import io
import json
from pathlib import Path

import pytest

from gridspace.config import ServiceConfig
from gridspace.fdir import Topology, parse_topology
from gridspace.httpapi import start_server, stop_server
from gridspace.ingestion import GridFrame, parse_frames
from gridspace.rules import Rule, RuleSet, apply_rule_mutation, load_rules
from gridspace.service import DecisionService

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def demo_frames_path() -> Path:
    return FIXTURES / "cloud-demo.frames"


@pytest.fixture(scope="session")
def demo_frames(demo_frames_path) -> list[GridFrame]:
    return parse_frames(demo_frames_path.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def demo_rules_dir() -> Path:
    return FIXTURES / "rules"


@pytest.fixture(scope="session")
def demo_rule(demo_rules_dir) -> Rule:
    ruleset = load_rules(demo_rules_dir)
    return ruleset.get("pv-cloud-cover")


@pytest.fixture(scope="session")
def two_feeder() -> Topology:
    return parse_topology((FIXTURES / "two-feeder.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def feeder_events() -> list[dict]:
    doc = json.loads((FIXTURES / "feeder-scenario.json").read_text(encoding="utf-8"))
    return doc["events"]


@pytest.fixture
def make_service():
    """Factory for an in-process service with optional rules and config."""

    def build(rules=(), config=None, post=None) -> DecisionService:
        ruleset = RuleSet()
        for rule in rules:
            ruleset = apply_rule_mutation(ruleset, "add", rule)
        return DecisionService(config or ServiceConfig(), ruleset, post)

    return build


@pytest.fixture
def live_server(make_service, demo_rule):
    """A running HTTP server on a free port, preloaded with the demo rule."""
    service = make_service(rules=[demo_rule], config=ServiceConfig(port=0))
    server = start_server(service)
    host, port = server.server_address[:2]
    try:
        yield f"http://{host}:{port}", service
    finally:
        stop_server(server)


def invoke_cli(argv) -> tuple[int, list[dict], str]:
    """Run the CLI in-process; returns (exit code, stdout JSON lines, stderr)."""
    from gridspace.cli import main

    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    lines = [json.loads(line) for line in out.getvalue().splitlines() if line.strip()]
    return code, lines, err.getvalue()
