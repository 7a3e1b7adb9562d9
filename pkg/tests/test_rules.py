"""Coverage rule parsing, evaluation semantics and rule-set snapshots."""

import json
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridspace.errors import DuplicateId, RuleParseError, UnknownId
from gridspace.invariants import (
    BigAnd,
    Implies,
    OccupyBox,
    OccupyPoint,
    Or,
    Owner,
    TimePoint,
)
from gridspace.rules import (
    DEFAULT_CLOUD_SEVERITY,
    DEFAULT_SEVERITY,
    RuleDirectoryWatcher,
    RuleSet,
    RuleWindow,
    apply_rule_mutation,
    evaluate_all,
    evaluate_rule,
    load_rules,
    parse_rule,
    rule_to_json_obj,
)

import oracles
import strategies as gen


def rule_doc(**overrides):
    doc = {
        "id": "r1",
        "priority": 5,
        "window": {"t1": 0, "t2": 0},
        "areas": [{"x1": 0, "y1": 0, "x2": 9, "y2": 9}],
        "owner": "cloud",
        "metric": "coverage_fraction",
        "threshold": 0.5,
        "stakeholders": ["operator"],
        "reaction": {"displays": [{"kind": "text-alert", "text": "heads up"}]},
    }
    doc.update(overrides)
    return doc


def owned_box(owner, box):
    return Implies(Owner(owner), box)


class TestParsing:
    def test_round_trip(self):
        rule = parse_rule(rule_doc())
        assert parse_rule(rule_to_json_obj(rule)) == rule

    @given(gen.coverage_rules())
    @settings(max_examples=100)
    def test_round_trip_generated(self, rule):
        assert parse_rule(rule_to_json_obj(rule)) == rule

    def test_cloud_severity_default(self):
        assert parse_rule(rule_doc()).severity == DEFAULT_CLOUD_SEVERITY
        assert DEFAULT_CLOUD_SEVERITY == "critical solar energy level"

    def test_other_owner_severity_default(self):
        assert parse_rule(rule_doc(owner="pv")).severity == DEFAULT_SEVERITY

    def test_explicit_severity_wins(self):
        assert parse_rule(rule_doc(severity="meh")).severity == "meh"

    def test_demo_rule_fixture(self, demo_rule):
        assert demo_rule is not None
        assert demo_rule.id == "pv-cloud-cover"
        assert demo_rule.severity == DEFAULT_CLOUD_SEVERITY
        assert demo_rule.window.sliding == 300
        assert demo_rule.metric == "covered_cells"

    @pytest.mark.parametrize(
        "doc",
        [
            {"priority": 1},
            rule_doc(id=""),
            rule_doc(id=7),
            rule_doc(bogus=True),
            rule_doc(priority=True),
            rule_doc(priority="1"),
            rule_doc(window={"sliding": 60, "t1": 0}),
            rule_doc(window={"t1": 5}),
            rule_doc(window={"t1": 9, "t2": 3}),
            rule_doc(window={"sliding": 0}),
            rule_doc(window="soon"),
            rule_doc(areas=[]),
            rule_doc(areas=[{"x1": 0, "y1": 0, "x2": 9}]),
            rule_doc(areas=[{"x1": 0, "y1": 0, "x2": 9, "y2": 9, "z": 1}]),
            rule_doc(owner=""),
            rule_doc(metric="sparkle"),
            rule_doc(threshold=-0.1),
            rule_doc(threshold="half"),
            rule_doc(metric="coverage_fraction", threshold=1.5),
            rule_doc(eval_step=0),
            rule_doc(eval_step=True),
            rule_doc(stakeholders=[]),
            rule_doc(stakeholders=["ok", 3]),
            rule_doc(severity=""),
            rule_doc(reaction={"displays": [{"kind": "smoke-signal"}]}),
            rule_doc(reaction={"displays": [{"kind": "map-overlay"}]}),
        ],
    )
    def test_rejects_invalid_documents(self, doc):
        with pytest.raises(RuleParseError):
            parse_rule(doc)

    def test_count_threshold_may_exceed_one(self):
        rule = parse_rule(rule_doc(metric="covered_cells", threshold=12))
        assert rule.threshold == 12.0


class TestWindow:
    def test_sliding_resolves_relative_to_now(self):
        assert RuleWindow(sliding=300).resolve(1000) == (700, 1000)

    def test_absolute_ignores_now(self):
        assert RuleWindow(t1=10, t2=20).resolve(99999) == (10, 20)

    def test_validators(self):
        with pytest.raises(ValueError):
            RuleWindow()
        with pytest.raises(ValueError):
            RuleWindow(t1=5)
        with pytest.raises(ValueError):
            RuleWindow(t1=9, t2=3)
        with pytest.raises(ValueError):
            RuleWindow(sliding=-1)


class TestEvaluation:
    def test_all_areas_must_clear_threshold(self):
        rule = parse_rule(
            rule_doc(
                areas=[
                    {"x1": 0, "y1": 0, "x2": 9, "y2": 9},
                    {"x1": 20, "y1": 0, "x2": 29, "y2": 9},
                ]
            )
        )
        covered = BigAnd(
            (
                owned_box("cloud", OccupyBox(0, 0, 5, 9)),
                owned_box("cloud", OccupyBox(20, 0, 26, 9)),
            )
        )
        trigger = evaluate_rule(rule, covered, now=0)
        assert trigger is not None
        assert [m for _, m in trigger.per_area] == [0.6, 0.7]
        assert trigger.rule_id == "r1"
        assert trigger.fired_at == 0
        assert trigger.severity_label == DEFAULT_CLOUD_SEVERITY

        thin = BigAnd(
            (
                owned_box("cloud", OccupyBox(0, 0, 5, 9)),
                owned_box("cloud", OccupyBox(20, 0, 23, 9)),
            )
        )
        assert evaluate_rule(rule, thin, now=0) is None

    def test_union_not_sum(self):
        rule = parse_rule(rule_doc(metric="covered_cells", threshold=61))
        overlapping = BigAnd(
            (
                owned_box("cloud", OccupyBox(0, 0, 5, 9)),
                owned_box("cloud", OccupyBox(0, 0, 5, 9)),
            )
        )
        assert evaluate_rule(rule, overlapping, now=0) is None

    def test_window_takes_the_maximum(self):
        rule = parse_rule(
            rule_doc(window={"t1": 0, "t2": 9}, metric="covered_cells", threshold=1)
        )
        blip = Implies(
            BigAnd((TimePoint(5), Owner("cloud"))), OccupyPoint(3, 3)
        )
        trigger = evaluate_rule(rule, blip, now=0)
        assert trigger is not None
        assert trigger.per_area[0][1] == 1.0

    def test_eval_step_can_miss_ticks(self):
        rule = parse_rule(
            rule_doc(
                window={"t1": 0, "t2": 4},
                metric="covered_cells",
                threshold=1,
                eval_step=2,
            )
        )
        blip = Implies(BigAnd((TimePoint(1), Owner("cloud"))), OccupyPoint(3, 3))
        assert evaluate_rule(rule, blip, now=0) is None

    def test_owner_must_match(self):
        rule = parse_rule(rule_doc(metric="covered_cells", threshold=1))
        model = owned_box("fog", OccupyBox(0, 0, 9, 9))
        assert evaluate_rule(rule, model, now=0) is None

    @given(gen.cloud_models(), gen.coverage_rules(), st.integers(0, 80))
    @settings(max_examples=150, deadline=None)
    def test_matches_bruteforce(self, model, rule, now):
        trigger = evaluate_rule(rule, model, now)
        expected = oracles.evaluate_rule_bruteforce(rule, model, now)
        if expected is None:
            assert trigger is None
        else:
            assert trigger is not None
            assert trigger.per_area == tuple(expected)

    @given(gen.cloud_models(), gen.coverage_rules(), st.integers(0, 80))
    @settings(max_examples=60, deadline=None)
    def test_deterministic(self, model, rule, now):
        assert evaluate_rule(rule, model, now) == evaluate_rule(rule, model, now)

    @given(
        gen.cloud_models(),
        gen.coverage_rules(),
        st.integers(0, 80),
        st.integers(-5, 5),
        st.integers(-5, 5),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_under_extra_coverage(self, model, rule, now, px, py):
        before = evaluate_rule(rule, model, now)
        if before is None:
            return
        grown = BigAnd(
            (model, Implies(Owner(rule.owner_tag), OccupyPoint(px, py)))
        )
        after = evaluate_rule(rule, grown, now)
        assert after is not None
        for (_, was), (_, now_measured) in zip(before.per_area, after.per_area):
            assert now_measured >= was


class TestEvaluateAll:
    def test_sorted_by_priority_then_id(self):
        rules = RuleSet()
        for rid, prio in (("zz", 1), ("aa", 2), ("mm", 1)):
            rules = apply_rule_mutation(
                rules,
                "add",
                parse_rule(rule_doc(id=rid, priority=prio, threshold=0.0)),
            )
        outcome = evaluate_all(rules, OccupyPoint(0, 0), now=0)
        assert [t.rule_id for t in outcome.triggers] == ["mm", "zz", "aa"]
        assert outcome.errors == ()

    def test_errors_do_not_abort(self):
        rules = RuleSet()
        for rid in ("a", "b"):
            rules = apply_rule_mutation(
                rules, "add", parse_rule(rule_doc(id=rid, threshold=0.0))
            )
        bad_model = Or(OccupyPoint(0, 0), OccupyPoint(1, 1))
        outcome = evaluate_all(rules, bad_model, now=0)
        assert outcome.triggers == ()
        assert [e.rule_id for e in outcome.errors] == ["a", "b"]
        assert all(e.error for e in outcome.errors)


class TestRuleSetMutations:
    def test_snapshots_are_immutable_and_versioned(self):
        base = RuleSet()
        r1 = parse_rule(rule_doc(id="one"))
        r2 = parse_rule(rule_doc(id="two"))
        v1 = apply_rule_mutation(base, "add", r1)
        v2 = apply_rule_mutation(v1, "add", r2)
        assert (base.revision, v1.revision, v2.revision) == (0, 1, 2)
        assert len(base) == 0 and len(v1) == 1 and len(v2) == 2
        assert v1.get("two") is None and v2.get("two") == r2

    def test_replace_and_remove(self):
        r1 = parse_rule(rule_doc(id="one"))
        v1 = apply_rule_mutation(RuleSet(), "add", r1)
        tweaked = parse_rule(rule_doc(id="one", priority=9))
        v2 = apply_rule_mutation(v1, "replace", tweaked)
        assert v2.get("one").priority == 9
        v3 = apply_rule_mutation(v2, "remove", rule_id="one")
        assert len(v3) == 0 and v3.revision == 3

    def test_conflicts(self):
        r1 = parse_rule(rule_doc(id="one"))
        v1 = apply_rule_mutation(RuleSet(), "add", r1)
        with pytest.raises(DuplicateId):
            apply_rule_mutation(v1, "add", r1)
        with pytest.raises(UnknownId):
            apply_rule_mutation(v1, "replace", parse_rule(rule_doc(id="ghost")))
        with pytest.raises(UnknownId):
            apply_rule_mutation(v1, "remove", rule_id="ghost")

    @given(st.lists(st.sampled_from(["add", "remove", "replace"]), max_size=12))
    def test_mutation_history_is_linear(self, ops):
        ids = iter(f"r{i}" for i in range(100))
        rules = RuleSet()
        live = {}
        applied = 0
        for op in ops:
            if op == "add":
                rule = parse_rule(rule_doc(id=next(ids)))
                rules = apply_rule_mutation(rules, "add", rule)
                live[rule.id] = rule
            elif live and op == "replace":
                target = sorted(live)[0]
                rule = parse_rule(rule_doc(id=target, priority=applied))
                rules = apply_rule_mutation(rules, "replace", rule)
                live[target] = rule
            elif live and op == "remove":
                target = sorted(live)[-1]
                rules = apply_rule_mutation(rules, "remove", rule_id=target)
                del live[target]
            else:
                continue
            applied += 1
        assert rules.revision == applied
        assert {r.id: r for r in rules} == live


class TestLoadRules:
    def test_loads_sorted_files_and_arrays(self, tmp_path):
        (tmp_path / "b.json").write_text(json.dumps(rule_doc(id="bee")))
        (tmp_path / "a.json").write_text(
            json.dumps([rule_doc(id="ant"), rule_doc(id="ape")])
        )
        rules = load_rules(tmp_path)
        assert [r.id for r in rules] == ["ant", "ape", "bee"]
        assert rules.revision == 3

    def test_duplicate_across_files(self, tmp_path):
        (tmp_path / "a.json").write_text(json.dumps(rule_doc(id="same")))
        (tmp_path / "b.json").write_text(json.dumps(rule_doc(id="same")))
        with pytest.raises(DuplicateId):
            load_rules(tmp_path)

    def test_bad_json_names_the_file(self, tmp_path):
        (tmp_path / "oops.json").write_text("{nope")
        with pytest.raises(RuleParseError) as err:
            load_rules(tmp_path)
        assert "oops.json" in str(err.value)

    def test_bad_rule_names_the_file(self, tmp_path):
        (tmp_path / "oops.json").write_text(json.dumps(rule_doc(owner="")))
        with pytest.raises(RuleParseError) as err:
            load_rules(tmp_path)
        assert "oops.json" in str(err.value)

    def test_demo_directory(self, demo_rules_dir):
        rules = load_rules(demo_rules_dir)
        assert [r.id for r in rules] == ["pv-cloud-cover"]


class TestDirectoryWatcher:
    def bump(self, path):
        st_ = path.stat()
        os.utime(path, (st_.st_atime, st_.st_mtime + 5))

    def test_diffs_become_mutations(self, tmp_path):
        events = []
        watcher = RuleDirectoryWatcher(
            tmp_path, lambda op, rule, rule_id: events.append((op, rule, rule_id))
        )
        watcher.scan_once()
        assert events == []

        target = tmp_path / "r.json"
        target.write_text(json.dumps(rule_doc(id="watched")))
        watcher.scan_once()
        assert [(op, r.id) for op, r, _ in events] == [("add", "watched")]

        watcher.scan_once()
        assert len(events) == 1

        target.write_text(json.dumps(rule_doc(id="watched", priority=9)))
        self.bump(target)
        watcher.scan_once()
        assert events[-1][0] == "replace"
        assert events[-1][1].priority == 9

        target.unlink()
        watcher.scan_once()
        assert events[-1] == ("remove", None, "watched")

    def test_prime_suppresses_existing_files(self, tmp_path):
        (tmp_path / "r.json").write_text(json.dumps(rule_doc(id="seeded")))
        events = []
        watcher = RuleDirectoryWatcher(
            tmp_path, lambda op, rule, rule_id: events.append(op)
        )
        watcher.prime()
        watcher.scan_once()
        assert events == []

    def test_unparseable_file_is_skipped(self, tmp_path):
        events = []
        watcher = RuleDirectoryWatcher(
            tmp_path, lambda op, rule, rule_id: events.append(op)
        )
        (tmp_path / "bad.json").write_text("{nope")
        watcher.scan_once()
        assert events == []
