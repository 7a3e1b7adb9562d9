"""Declarative alerting rules over the live model.

Rules are JSON documents; a RuleSet is an immutable snapshot with a
monotonically increasing revision.  Evaluation measures owner coverage per
area over a time window (per-tick de-duplicated count, window maximum) and
fires when every area clears the threshold.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Mapping

from .errors import (
    DuplicateId,
    GridspaceError,
    RuleParseError,
    UnknownId,
    UnsupportedFragment,
)
from .invariants import Clause, Invariant, OccupyBox, OccupyPoint, Tick, to_clauses
from .reactions import ReactionSpec, parse_reaction_spec
from .reasoning import clip_clause

log = logging.getLogger("gridspace.rules")

METRICS = ("covered_cells", "coverage_fraction")
DEFAULT_CLOUD_SEVERITY = "critical solar energy level"
DEFAULT_SEVERITY = "alert"


@dataclass(frozen=True)
class RuleWindow:
    """Absolute [t1, t2] when ``sliding`` is None, else [now - sliding, now]."""

    t1: Tick | None = None
    t2: Tick | None = None
    sliding: Tick | None = None

    def __post_init__(self) -> None:
        if self.sliding is not None:
            if self.t1 is not None or self.t2 is not None:
                raise ValueError("window is either absolute or sliding, not both")
            if self.sliding <= 0:
                raise ValueError("sliding duration must be positive")
        else:
            if self.t1 is None or self.t2 is None:
                raise ValueError("absolute window needs both t1 and t2")
            if self.t1 > self.t2:
                raise ValueError(f"window start {self.t1} after end {self.t2}")

    def resolve(self, now: Tick) -> tuple[Tick, Tick]:
        if self.sliding is not None:
            return (now - self.sliding, now)
        assert self.t1 is not None and self.t2 is not None
        return (self.t1, self.t2)


@dataclass(frozen=True)
class Rule:
    id: str
    priority: int
    window: RuleWindow
    areas: tuple[OccupyBox, ...]
    owner_tag: str
    metric: str
    threshold: float
    reaction: ReactionSpec
    stakeholders: tuple[str, ...]
    eval_step: Tick = 1
    severity: str = DEFAULT_SEVERITY


@dataclass(frozen=True)
class Trigger:
    rule_id: str
    fired_at: Tick
    per_area: tuple[tuple[OccupyBox, float], ...]
    severity_label: str


@dataclass(frozen=True)
class RuleError:
    rule_id: str
    error: str


def _require(cond: bool, rule_id: str | None, reason: str) -> None:
    if not cond:
        raise RuleParseError(rule_id, reason)


def parse_rule(obj: object) -> Rule:
    """Validate one rule document."""
    _require(isinstance(obj, dict), None, "rule must be a JSON object")
    assert isinstance(obj, dict)
    rule_id = obj.get("id")
    _require(isinstance(rule_id, str) and rule_id != "", None, "id must be a non-empty string")
    known = {
        "id", "priority", "window", "areas", "owner", "metric", "threshold",
        "eval_step", "severity", "stakeholders", "reaction",
    }
    extra = set(obj) - known
    _require(not extra, rule_id, f"unknown fields {sorted(extra)}")

    priority = obj.get("priority")
    _require(isinstance(priority, int) and not isinstance(priority, bool), rule_id,
             "priority must be an integer")

    window_obj = obj.get("window")
    _require(isinstance(window_obj, dict), rule_id, "window must be an object")
    try:
        if "sliding" in window_obj:
            _require(set(window_obj) == {"sliding"}, rule_id, "sliding window takes only sliding")
            window = RuleWindow(sliding=_int_field(window_obj, "sliding", rule_id))
        else:
            _require(set(window_obj) == {"t1", "t2"}, rule_id, "window needs t1 and t2 or sliding")
            window = RuleWindow(
                t1=_int_field(window_obj, "t1", rule_id),
                t2=_int_field(window_obj, "t2", rule_id),
            )
    except ValueError as exc:
        raise RuleParseError(rule_id, str(exc)) from exc

    areas_obj = obj.get("areas")
    _require(isinstance(areas_obj, list) and len(areas_obj) >= 1, rule_id,
             "areas must be a non-empty array")
    areas = []
    for i, a in enumerate(areas_obj):
        _require(isinstance(a, dict) and set(a) == {"x1", "y1", "x2", "y2"}, rule_id,
                 f"areas[{i}] needs exactly x1,y1,x2,y2")
        areas.append(OccupyBox(*(_int_field(a, k, rule_id) for k in ("x1", "y1", "x2", "y2"))))

    owner = obj.get("owner")
    _require(isinstance(owner, str) and owner != "", rule_id, "owner must be a non-empty string")

    metric = obj.get("metric")
    _require(metric in METRICS, rule_id, f"metric must be one of {METRICS}")

    threshold = obj.get("threshold")
    _require(isinstance(threshold, (int, float)) and not isinstance(threshold, bool),
             rule_id, "threshold must be a number")
    _require(threshold >= 0, rule_id, "threshold must be >= 0")
    if metric == "coverage_fraction":
        _require(threshold <= 1, rule_id, "coverage_fraction threshold must be <= 1")

    eval_step = obj.get("eval_step", 1)
    _require(isinstance(eval_step, int) and not isinstance(eval_step, bool) and eval_step >= 1,
             rule_id, "eval_step must be a positive integer")

    severity = obj.get("severity")
    if severity is None:
        severity = DEFAULT_CLOUD_SEVERITY if owner == "cloud" else DEFAULT_SEVERITY
    _require(isinstance(severity, str) and severity != "", rule_id, "severity must be a string")

    stakeholders_obj = obj.get("stakeholders")
    _require(
        isinstance(stakeholders_obj, list)
        and len(stakeholders_obj) >= 1
        and all(isinstance(s, str) and s for s in stakeholders_obj),
        rule_id,
        "stakeholders must be a non-empty array of strings",
    )

    try:
        reaction = parse_reaction_spec(obj.get("reaction"))
    except ValueError as exc:
        raise RuleParseError(rule_id, f"reaction: {exc}") from exc

    return Rule(
        id=rule_id,
        priority=priority,
        window=window,
        areas=tuple(areas),
        owner_tag=owner,
        metric=metric,
        threshold=float(threshold),
        reaction=reaction,
        stakeholders=tuple(stakeholders_obj),
        eval_step=eval_step,
        severity=severity,
    )


def _int_field(obj: Mapping, key: str, rule_id: str | None) -> int:
    v = obj.get(key)
    _require(isinstance(v, int) and not isinstance(v, bool), rule_id,
             f"{key} must be an integer")
    return v


def rule_to_json_obj(rule: Rule) -> dict:
    """The rule's JSON document form (inverse of parse_rule)."""
    window: dict = (
        {"sliding": rule.window.sliding}
        if rule.window.sliding is not None
        else {"t1": rule.window.t1, "t2": rule.window.t2}
    )
    return {
        "id": rule.id,
        "priority": rule.priority,
        "window": window,
        "areas": [{"x1": a.x1, "y1": a.y1, "x2": a.x2, "y2": a.y2} for a in rule.areas],
        "owner": rule.owner_tag,
        "metric": rule.metric,
        "threshold": rule.threshold,
        "eval_step": rule.eval_step,
        "severity": rule.severity,
        "stakeholders": list(rule.stakeholders),
        "reaction": rule.reaction.to_json_obj(),
    }


@dataclass(frozen=True, eq=False)
class RuleSet:
    rules: tuple[Rule, ...] = ()
    revision: int = 0

    def get(self, rule_id: str) -> Rule | None:
        for r in self.rules:
            if r.id == rule_id:
                return r
        return None

    def __iter__(self) -> Iterator[Rule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


def apply_rule_mutation(
    rules: RuleSet, op: str, rule: Rule | None = None, rule_id: str | None = None
) -> RuleSet:
    """Return a new snapshot with one rule added, replaced or removed."""
    if op == "add":
        assert rule is not None
        if rules.get(rule.id) is not None:
            raise DuplicateId(rule.id)
        return RuleSet(rules.rules + (rule,), rules.revision + 1)
    if op == "replace":
        assert rule is not None
        if rules.get(rule.id) is None:
            raise UnknownId(rule.id)
        return RuleSet(
            tuple(rule if r.id == rule.id else r for r in rules.rules),
            rules.revision + 1,
        )
    if op == "remove":
        assert rule_id is not None
        if rules.get(rule_id) is None:
            raise UnknownId(rule_id)
        return RuleSet(
            tuple(r for r in rules.rules if r.id != rule_id),
            rules.revision + 1,
        )
    raise ValueError(f"unknown mutation {op!r}")


def load_rules(directory: str | Path) -> RuleSet:
    """Load every *.json rule file in a directory (sorted by name).

    A file holds one rule object or an array of them.
    """
    ruleset = RuleSet()
    for path in sorted(Path(directory).glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise RuleParseError(None, f"{path.name}: {exc}") from exc
        docs = doc if isinstance(doc, list) else [doc]
        for obj in docs:
            try:
                rule = parse_rule(obj)
            except RuleParseError as exc:
                raise RuleParseError(exc.rule_id, f"{path.name}: {exc.reason}") from exc
            ruleset = apply_rule_mutation(ruleset, "add", rule)
    return ruleset


def _covered_cells(
    clauses: list[Clause], owner_tag: str, area: OccupyBox, t: Tick
) -> int:
    """Distinct covered cells of ``area`` at tick ``t`` for ``owner_tag``."""
    cells: set[tuple[int, int]] = set()
    for clause in clauses:
        if clause.owner_tag != owner_tag or not clause.holds_at(t):
            continue
        clipped = clip_clause(clause, area)
        if clipped is None:
            continue
        for g in clipped.geometry:
            if isinstance(g, OccupyPoint):
                cells.add((g.x, g.y))
            elif isinstance(g, OccupyBox):
                for y in range(g.y1, g.y2 + 1):
                    for x in range(g.x1, g.x2 + 1):
                        cells.add((x, y))
            else:
                fp = g.footprint
                for y in range(fp.y1, fp.y2 + 1):
                    for x in range(fp.x1, fp.x2 + 1):
                        cells.add((x, y))
    return len(cells)


def evaluate_rule(rule: Rule, model: Invariant, now: Tick) -> Trigger | None:
    """Fire iff every area's windowed measurement clears the threshold.

    Per tick the measurement is the count of distinct covered cells (union
    across clauses); per area the window aggregate is the maximum over
    evaluation steps; coverage_fraction divides by the area's cell count.
    """
    start, stop = rule.window.resolve(now)
    clauses = to_clauses(model)
    per_area: list[tuple[OccupyBox, float]] = []
    for area in rule.areas:
        best = 0
        for t in range(start, stop + 1, rule.eval_step):
            count = _covered_cells(clauses, rule.owner_tag, area, t)
            if count > best:
                best = count
        measured: float = float(best)
        if rule.metric == "coverage_fraction":
            measured = best / area.cell_count
        if measured < rule.threshold:
            return None
        per_area.append((area, measured))
    return Trigger(rule.id, now, tuple(per_area), rule.severity)


@dataclass(frozen=True)
class EvaluationOutcome:
    triggers: tuple[Trigger, ...]
    errors: tuple[RuleError, ...]


def evaluate_all(rules: RuleSet, model: Invariant, now: Tick) -> EvaluationOutcome:
    """Evaluate every rule; one rule's failure never aborts the others.

    Triggers come back sorted by (priority, rule id).
    """
    fired: list[tuple[int, str, Trigger]] = []
    errors: list[RuleError] = []
    for rule in rules:
        try:
            trigger = evaluate_rule(rule, model, now)
        except (UnsupportedFragment, GridspaceError) as exc:
            errors.append(RuleError(rule.id, str(exc)))
            continue
        if trigger is not None:
            fired.append((rule.priority, rule.id, trigger))
    fired.sort(key=lambda item: (item[0], item[1]))
    return EvaluationOutcome(tuple(t for _, _, t in fired), tuple(errors))


class RuleDirectoryWatcher:
    """Polls a rules/ directory and maps file changes to rule mutations.

    ``apply`` receives (op, rule, rule_id); create/modify/delete become
    add/replace/remove.  One rule per file.
    """

    def __init__(
        self,
        directory: str | Path,
        apply: Callable[[str, Rule | None, str | None], None],
        poll_seconds: float = 1.0,
    ) -> None:
        self.directory = Path(directory)
        self.apply = apply
        self.poll_seconds = poll_seconds
        self._known: dict[Path, tuple[float, str]] = {}
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def prime(self) -> None:
        """Record the current directory state without emitting mutations."""
        for path in self.directory.glob("*.json"):
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
                rule = parse_rule(doc)
            except (OSError, json.JSONDecodeError, RuleParseError):
                continue
            self._known[path] = (path.stat().st_mtime, rule.id)

    def scan_once(self) -> None:
        """One poll: diff the directory against the last scan."""
        present: dict[Path, tuple[float, str]] = {}
        for path in sorted(self.directory.glob("*.json")):
            try:
                mtime = path.stat().st_mtime
                previous = self._known.get(path)
                if previous is not None and previous[0] == mtime:
                    present[path] = previous
                    continue
                doc = json.loads(path.read_text(encoding="utf-8"))
                rule = parse_rule(doc)
            except (OSError, json.JSONDecodeError, RuleParseError) as exc:
                log.warning("rules watcher: %s: %s", path.name, exc)
                if path.exists() and path in self._known:
                    present[path] = self._known[path]
                continue
            if previous is None:
                self.apply("add", rule, None)
            else:
                self.apply("replace", rule, None)
            present[path] = (mtime, rule.id)
        for path, (_, rule_id) in self._known.items():
            if path not in present:
                self.apply("remove", None, rule_id)
        self._known = present

    def start(self) -> None:
        def loop() -> None:
            while not self._stop.wait(self.poll_seconds):
                try:
                    self.scan_once()
                except Exception:
                    log.exception("rules watcher poll failed")

        self._thread = threading.Thread(target=loop, name="rules-watcher", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
