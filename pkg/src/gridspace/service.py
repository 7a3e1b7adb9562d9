"""Decision service: one writer feeding the store, rules, and alert log.

The service owns a clause store, a mutable rule set, and a bounded alert
log with a sequence cursor for long polling.  Frame handling inserts the
frame's model, evaluates every rule against a window-pruned submodel, and
turns fired rules into rendered reaction documents.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Callable

from .analysis import HeatMap, weak_link_heatmap
from .config import ServiceConfig
from .errors import DuplicateId, GridspaceError, UnsupportedFragment
from .fdir import ScenarioResult, Topology, run_scenario
from .ingestion import GridFrame, SourceConfig, frame_to_invariant
from .invariants import Invariant, OccupyBox, Tick
from .reactions import ReactionDoc, render_reaction, route_reactions
from .reasoning import TimeWindow
from .rules import (
    Rule,
    RuleError,
    RuleSet,
    Trigger,
    apply_rule_mutation,
    evaluate_rule,
)
from .store import ModelStore, state_model, window_model

log = logging.getLogger(__name__)


def trigger_to_json_obj(trigger: Trigger, priority: int, stakeholders: tuple[str, ...]) -> dict:
    return {
        "ruleId": trigger.rule_id,
        "firedAt": trigger.fired_at,
        "severity": trigger.severity_label,
        "priority": priority,
        "stakeholders": list(stakeholders),
        "perArea": [
            {
                "x1": area.x1,
                "y1": area.y1,
                "x2": area.x2,
                "y2": area.y2,
                "measured": measured,
            }
            for area, measured in trigger.per_area
        ],
    }


class AlertLog:
    """Bounded alert history with monotonically increasing sequence numbers.

    ``since`` returns everything after a cursor; ``wait_since`` blocks until
    something newer arrives or the timeout lapses.  Old entries fall off the
    front once capacity is reached; the cursor contract survives eviction
    because sequence numbers never reset.
    """

    def __init__(self, capacity: int) -> None:
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: list[dict] = []
        self._next_seq = 1
        self._cond = threading.Condition()

    def append(self, records: list[dict]) -> list[dict]:
        if not records:
            return []
        with self._cond:
            stamped = []
            for record in records:
                entry = dict(record)
                entry["seq"] = self._next_seq
                self._next_seq += 1
                stamped.append(entry)
            self._entries.extend(stamped)
            if len(self._entries) > self.capacity:
                del self._entries[: len(self._entries) - self.capacity]
            self._cond.notify_all()
            return stamped

    @property
    def last_seq(self) -> int:
        with self._cond:
            return self._next_seq - 1

    def since(self, seq: int) -> list[dict]:
        with self._cond:
            return [e for e in self._entries if e["seq"] > seq]

    def since_fired(self, fired_at: Tick | None = None) -> list[dict]:
        """Entries fired at or after a tick; all of them when no tick given."""
        with self._cond:
            if fired_at is None:
                return list(self._entries)
            return [e for e in self._entries if e["firedAt"] >= fired_at]

    def wait_since(self, seq: int, timeout: float) -> list[dict]:
        with self._cond:
            self._cond.wait_for(lambda: self._next_seq - 1 > seq, timeout=timeout)
            return [e for e in self._entries if e["seq"] > seq]


@dataclass(frozen=True)
class FrameOutcome:
    revision: int
    inserted: bool
    triggers: tuple[Trigger, ...] = ()
    errors: tuple[RuleError, ...] = ()
    alerts: tuple[dict, ...] = ()
    deliveries: tuple = ()


@dataclass
class FdirState:
    topology: Topology | None = None
    result: ScenarioResult | None = None


class DecisionService:
    """Core orchestration shared by the HTTP API and the CLI serve path."""

    def __init__(
        self,
        config: ServiceConfig | None = None,
        rules: RuleSet | None = None,
        post: Callable[[str, ReactionDoc], None] | None = None,
    ) -> None:
        self.config = config or ServiceConfig()
        self.store = ModelStore(retention=self.config.retention)
        self.alerts = AlertLog(self.config.alert_capacity)
        self._rules = rules if rules is not None else RuleSet()
        self._writer_lock = threading.Lock()
        self._post = post
        self._source_cfg = SourceConfig(
            kind="file-replay",
            uri="",
            owner_tag=self.config.owner_tag,
            intensity_threshold=self.config.intensity_threshold,
        )
        self.fdir = FdirState()

    # Rule management

    @property
    def rules(self) -> RuleSet:
        return self._rules

    def put_rule(self, rule: Rule, create_only: bool = False) -> bool:
        """Upsert a rule; returns True when it was newly created.

        ``create_only`` turns an existing id into a conflict instead of a
        replacement.
        """
        with self._writer_lock:
            existing = self._rules.get(rule.id)
            if existing is None:
                self._rules = apply_rule_mutation(self._rules, "add", rule=rule)
                return True
            if create_only:
                raise DuplicateId(rule.id)
            self._rules = apply_rule_mutation(self._rules, "replace", rule=rule)
            return False

    def delete_rule(self, rule_id: str) -> None:
        with self._writer_lock:
            self._rules = apply_rule_mutation(self._rules, "remove", rule_id=rule_id)

    def apply_rule_op(self, op: str, rule: Rule | None, rule_id: str | None) -> None:
        """Watcher callback: map a directory diff onto the live rule set."""
        try:
            with self._writer_lock:
                self._rules = apply_rule_mutation(self._rules, op, rule=rule, rule_id=rule_id)
        except GridspaceError as exc:
            log.warning("rule mutation %s rejected: %s", op, exc)

    # Ingestion and evaluation

    def evaluate_at(self, now: Tick) -> tuple[tuple[Trigger, ...], tuple[RuleError, ...]]:
        """Evaluate every rule at ``now`` against window-pruned submodels.

        Pruning only narrows the clauses handed to the evaluator; the
        candidate filter is a superset of everything a rule can observe, so
        results match evaluating the full model.
        """
        state = self.store.snapshot()
        rules = self._rules
        fired: list[tuple[int, str, Trigger]] = []
        errors: list[RuleError] = []
        for rule in rules:
            try:
                start, stop = rule.window.resolve(now)
                submodel = window_model(state, start, stop, rule.areas)
                trigger = evaluate_rule(rule, submodel, now)
            except (UnsupportedFragment, GridspaceError) as exc:
                errors.append(RuleError(rule.id, str(exc)))
                continue
            if trigger is not None:
                fired.append((rule.priority, rule.id, trigger))
        fired.sort(key=lambda item: (item[0], item[1]))
        return tuple(t for _, _, t in fired), tuple(errors)

    def handle_frame(self, frame: GridFrame) -> FrameOutcome:
        """Ingest one frame: insert, evaluate, render, log, deliver.

        A frame already seen (same owner and timestamp) is dropped without a
        revision bump or evaluation.
        """
        model = frame_to_invariant(frame, self._source_cfg)
        dedup_key = (self._source_cfg.owner_tag, frame.timestamp)
        with self._writer_lock:
            revision, inserted = self.store.insert_model(
                model, dedup_key=dedup_key, now=frame.timestamp
            )
            if not inserted:
                return FrameOutcome(revision, False)
            triggers, errors = self.evaluate_at(frame.timestamp)
            records: list[dict] = []
            docs: list[ReactionDoc] = []
            rules = self._rules
            for trigger in triggers:
                rule = rules.get(trigger.rule_id)
                if rule is None:
                    continue
                doc = render_reaction(trigger, rule)
                docs.append(doc)
                record = trigger_to_json_obj(trigger, rule.priority, rule.stakeholders)
                record["xml"] = doc.xml
                records.append(record)
            stamped = self.alerts.append(records)
        deliveries: tuple = ()
        if docs and (self.config.deliver or self._post is not None) and self.config.endpoints:
            deliveries = tuple(
                route_reactions(
                    docs,
                    self.config.endpoints,
                    max_attempts=self.config.max_attempts,
                    in_flight=self.config.in_flight,
                    post=self._post,
                )
            )
        return FrameOutcome(revision, True, triggers, errors, tuple(stamped), deliveries)

    def handle_model(self, model: Invariant, now: Tick | None = None) -> int:
        """Insert a bare model (no evaluation); returns the new revision."""
        with self._writer_lock:
            revision, _ = self.store.insert_model(model, dedup_key=None, now=now)
            return revision

    # Queries

    def model(self) -> Invariant:
        return state_model(self.store.snapshot())

    def revision(self) -> int:
        return self.store.snapshot().revision

    def heatmap(
        self,
        region: OccupyBox,
        window: TimeWindow,
        cell_size: int,
        aggregate: str = "max",
    ) -> HeatMap:
        state = self.store.snapshot()
        submodel = window_model(state, window.start, window.stop, [region])
        return weak_link_heatmap(submodel, region, window, cell_size, aggregate)

    def run_fdir_scenario(self, topology: Topology, events: list[dict]) -> ScenarioResult:
        result = run_scenario(topology, events)
        self.fdir = FdirState(topology=result.final, result=result)
        return result
