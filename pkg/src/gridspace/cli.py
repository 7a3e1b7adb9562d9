"""Operator and CI entry points.

Subcommands cover the offline pipeline (eval, convert, validate-rules,
heatmap, estimate, fdir-sim) and the running service (serve).  Output is
newline-delimited JSON on stdout; failures put one JSON error object on
stderr.  Exit codes: 0 success, 1 usage, 2 parse or validation, 3 runtime.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from pathlib import Path

from .analysis import (
    estimate_renewable,
    heatmap_to_json_obj,
    heatmap_to_pgm,
    weak_link_heatmap,
)
from .config import load_config
from .errors import (
    DimensionMismatch,
    DomainError,
    DuplicateId,
    GridspaceError,
    ParseError,
    RuleParseError,
    UnknownId,
    UnsupportedFragment,
)
from .ingestion import SourceConfig, frame_to_invariant, parse_grid_frame, run_source
from .invariants import OccupyBox
from .reactions import render_reaction
from .reasoning import TimeWindow
from .rules import RuleDirectoryWatcher, evaluate_rule, load_rules
from .serialization import load_model_text, serialize_json_node, serialize_xml
from .service import DecisionService, trigger_to_json_obj

VALIDATION_ERRORS = (
    ParseError,
    RuleParseError,
    DomainError,
    DimensionMismatch,
    UnsupportedFragment,
    DuplicateId,
    UnknownId,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _emit(obj: object) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.stderr.flush()


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _require_dir(path: str) -> str:
    if not Path(path).is_dir():
        raise FileNotFoundError(f"no such directory: {path}")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridspace", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_serve = sub.add_parser("serve", help="run the decision service")
    p_serve.add_argument("--config", help="TOML config path (falls back to GRIDSPACE_CONFIG)")
    p_serve.add_argument("--host", help="listen address override")
    p_serve.add_argument("--port", type=int, help="listen port override (0 picks a free port)")
    p_serve.set_defaults(func=cmd_serve)

    p_eval = sub.add_parser("eval", help="one-shot rule evaluation over a model file")
    p_eval.add_argument("--model", required=True, help="model file (.inv.json/.inv.xml/.inv.ndjson)")
    p_eval.add_argument("--rules", required=True, help="rules directory")
    p_eval.add_argument("--at", required=True, type=int, help="evaluation tick")
    p_eval.set_defaults(func=cmd_eval)

    p_convert = sub.add_parser("convert", help="frame text to canonical model form")
    p_convert.add_argument("--frame", required=True, help="frame text file")
    fmt = p_convert.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="canonical JSON node (default)")
    fmt.add_argument("--xml", action="store_true", help="canonical XML document")
    p_convert.add_argument("--owner", default="cloud", help="owner tag for covered cells")
    p_convert.add_argument(
        "--threshold", type=int, default=1, help="minimum intensity that counts as covered"
    )
    p_convert.set_defaults(func=cmd_convert)

    p_validate = sub.add_parser("validate-rules", help="load and check a rules directory")
    p_validate.add_argument("directory", help="rules directory")
    p_validate.set_defaults(func=cmd_validate_rules)

    p_heat = sub.add_parser("heatmap", help="weak-link deficit map over a region")
    p_heat.add_argument("--model", required=True, help="model file")
    p_heat.add_argument("--region", required=True, help="x1,y1,x2,y2")
    p_heat.add_argument("--t1", required=True, type=int)
    p_heat.add_argument("--t2", required=True, type=int)
    p_heat.add_argument("--cell", required=True, type=int, help="heat cell side length")
    p_heat.add_argument("--aggregate", default="max", choices=["max", "mean"])
    p_heat.add_argument("--out", required=True, help="output prefix (.json/.pgm/.png)")
    p_heat.set_defaults(func=cmd_heatmap)

    p_est = sub.add_parser("estimate", help="renewable yield and payback estimate")
    p_est.add_argument("--profile", help="TOML file with parameter defaults")
    p_est.add_argument("--panel-area-m2", type=float)
    p_est.add_argument("--irradiance-kwh-m2-yr", type=float)
    p_est.add_argument("--efficiency", type=float)
    p_est.add_argument("--performance-ratio", type=float)
    p_est.add_argument("--capex", type=float)
    p_est.add_argument("--tariff-per-kwh", type=float)
    p_est.add_argument("--opex-per-year", type=float)
    p_est.add_argument("--lifetime-years", type=float)
    p_est.set_defaults(func=cmd_estimate)

    p_fdir = sub.add_parser("fdir-sim", help="replay a fault scenario over a topology")
    p_fdir.add_argument("--topology", required=True, help="topology file (.json or .csv)")
    p_fdir.add_argument("--scenario", required=True, help="scenario JSON (events array)")
    p_fdir.set_defaults(func=cmd_fdir_sim)

    return parser


def cmd_serve(args: argparse.Namespace) -> int:
    from .httpapi import start_server, stop_server

    cfg = load_config(args.config)
    overrides = {}
    if args.host is not None:
        overrides["host"] = args.host
    if args.port is not None:
        overrides["port"] = args.port
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)

    service = DecisionService(cfg)
    if cfg.rules_dir:
        for rule in load_rules(cfg.rules_dir):
            service.put_rule(rule)
    watcher = None
    if cfg.rules_dir:
        watcher = RuleDirectoryWatcher(
            cfg.rules_dir, service.apply_rule_op, poll_seconds=cfg.rules_poll_seconds
        )
        watcher.prime()
        watcher.start()
    handles = [
        run_source(source, lambda frame: service.handle_frame(frame))
        for source in cfg.sources
    ]
    server = start_server(service, cfg)
    host, port = server.server_address[:2]
    _emit({"listening": f"{host}:{port}", "port": port, "rules": len(service.rules)})
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        for handle in handles:
            handle.stop()
        if watcher is not None:
            watcher.stop()
        stop_server(server)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    model = load_model_text(_read_text(args.model), args.model)
    rules = load_rules(_require_dir(args.rules))
    fired = []
    for rule in rules:
        try:
            trigger = evaluate_rule(rule, model, args.at)
        except GridspaceError as exc:
            _emit_error("rule", f"{rule.id}: {exc}")
            continue
        if trigger is not None:
            fired.append((rule.priority, rule.id, trigger, rule))
    fired.sort(key=lambda item: (item[0], item[1]))
    for priority, _, trigger, rule in fired:
        record = trigger_to_json_obj(trigger, priority, rule.stakeholders)
        record["xml"] = render_reaction(trigger, rule).xml
        _emit(record)
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    frame = parse_grid_frame(_read_text(args.frame))
    cfg = SourceConfig(
        kind="file-replay",
        uri=args.frame,
        owner_tag=args.owner,
        intensity_threshold=args.threshold,
    )
    model = frame_to_invariant(frame, cfg)
    if args.xml:
        _print_raw(serialize_xml(model))
    else:
        _print_raw(serialize_json_node(model))
    return 0


def _print_raw(text: str) -> None:
    sys.stdout.write(text + "\n")
    sys.stdout.flush()


def cmd_validate_rules(args: argparse.Namespace) -> int:
    rules = load_rules(_require_dir(args.directory))
    _emit({"ok": True, "rules": len(rules)})
    return 0


def cmd_heatmap(args: argparse.Namespace) -> int:
    from .figures import render_heatmap_png

    model = load_model_text(_read_text(args.model), args.model)
    parts = args.region.split(",")
    if len(parts) != 4:
        raise DomainError("region must be x1,y1,x2,y2")
    try:
        x1, y1, x2, y2 = (int(p) for p in parts)
    except ValueError as exc:
        raise DomainError(f"region must be four integers: {exc}") from exc
    region = OccupyBox(x1, y1, x2, y2)
    window = TimeWindow(args.t1, args.t2)
    hm = weak_link_heatmap(model, region, window, args.cell, args.aggregate)
    out = Path(args.out)
    json_path = out.with_suffix(".json")
    pgm_path = out.with_suffix(".pgm")
    png_path = out.with_suffix(".png")
    json_path.write_text(json.dumps(heatmap_to_json_obj(hm)) + "\n", encoding="utf-8")
    pgm_path.write_text(heatmap_to_pgm(hm), encoding="utf-8")
    render_heatmap_png(hm, str(png_path))
    _emit(
        {
            "out": [str(json_path), str(pgm_path), str(png_path)],
            "maxScore": max(hm.scores) if hm.scores else 0.0,
            "missingQuantities": hm.missing_quantities,
        }
    )
    return 0


_ESTIMATE_KEYS = (
    "panel_area_m2",
    "irradiance_kwh_m2_yr",
    "efficiency",
    "performance_ratio",
    "capex",
    "tariff_per_kwh",
    "opex_per_year",
    "lifetime_years",
)


def cmd_estimate(args: argparse.Namespace) -> int:
    params: dict[str, float] = {}
    if args.profile:
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib

        with open(args.profile, "rb") as fh:
            doc = tomllib.load(fh)
        unknown = set(doc) - set(_ESTIMATE_KEYS)
        if unknown:
            raise DomainError(f"unknown profile keys: {sorted(unknown)}")
        for key, value in doc.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise DomainError(f"profile key {key!r} must be a number")
            params[key] = float(value)
    for key in _ESTIMATE_KEYS:
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    missing = [k for k in _ESTIMATE_KEYS if k not in params]
    if missing:
        raise _UsageError(f"missing estimate parameters: {', '.join(missing)}")
    estimate = estimate_renewable(**params)
    _emit(estimate.to_json_obj())
    return 0


def cmd_fdir_sim(args: argparse.Namespace) -> int:
    from .fdir import parse_topology, parse_topology_csv, run_scenario

    text = _read_text(args.topology)
    if args.topology.endswith(".csv"):
        topo = parse_topology_csv(text)
    else:
        topo = parse_topology(text)
    doc = json.loads(_read_text(args.scenario))
    events = doc["events"] if isinstance(doc, dict) else doc
    if not isinstance(events, list):
        raise DomainError("scenario must be an events array")
    result = run_scenario(topo, events)
    for step in result.steps:
        _emit(step.to_json_obj())
    _emit({"report": result.report.to_json_obj()})
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _emit_error("usage", str(exc))
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        _emit_error("usage", str(exc))
        return 1
    except VALIDATION_ERRORS as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    except FileNotFoundError as exc:
        _emit_error("missing_file", str(exc))
        return 2
    except json.JSONDecodeError as exc:
        _emit_error("ParseError", str(exc))
        return 2
    except (KeyError, ValueError, TypeError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    except GridspaceError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 3
    except OSError as exc:
        _emit_error("io", str(exc))
        return 3
    except KeyboardInterrupt:
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
