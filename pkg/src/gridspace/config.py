"""Service configuration loaded from a TOML file.

The config path comes from the command line, falling back to the
GRIDSPACE_CONFIG environment variable, falling back to built-in defaults.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DomainError
from .ingestion import SourceConfig
from .store import DEFAULT_RETENTION

ENV_CONFIG = "GRIDSPACE_CONFIG"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8321
    rules_dir: str | None = None
    rules_poll_seconds: float = 1.0
    retention: int = DEFAULT_RETENTION
    alert_capacity: int = 10_000
    owner_tag: str = "cloud"
    intensity_threshold: int = 1
    endpoints: dict[str, str] = field(default_factory=dict)
    max_attempts: int = 3
    in_flight: int = 8
    deliver: bool = False
    ui_dir: str | None = None
    token: str | None = None
    sources: tuple[SourceConfig, ...] = ()


_KNOWN = {
    "host": str,
    "port": int,
    "rules_dir": str,
    "rules_poll_seconds": (int, float),
    "retention": int,
    "alert_capacity": int,
    "owner_tag": str,
    "intensity_threshold": int,
    "endpoints": dict,
    "max_attempts": int,
    "in_flight": int,
    "deliver": bool,
    "ui_dir": str,
    "token": str,
    "sources": list,
}

_SOURCE_KEYS = {
    "kind": str,
    "uri": str,
    "poll_interval": (int, float),
    "owner_tag": str,
    "intensity_threshold": int,
}


def _parse_source(obj: object) -> SourceConfig:
    if not isinstance(obj, dict):
        raise DomainError("each source must be a table")
    unknown = set(obj) - set(_SOURCE_KEYS)
    if unknown:
        raise DomainError(f"unknown source keys: {sorted(unknown)}")
    for key, expected in _SOURCE_KEYS.items():
        if key in obj and not isinstance(obj[key], expected):
            raise DomainError(f"source key {key!r} has the wrong type")
    try:
        return SourceConfig(**obj)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"invalid source: {exc}") from exc


def config_from_obj(obj: dict) -> ServiceConfig:
    if not isinstance(obj, dict):
        raise DomainError("config must be a table")
    unknown = set(obj) - set(_KNOWN)
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in obj.items():
        expected = _KNOWN[key]
        if not isinstance(value, expected) or isinstance(value, bool) != (expected is bool):
            raise DomainError(f"config key {key!r} has the wrong type")
        kwargs[key] = value
    if "endpoints" in kwargs:
        eps = kwargs["endpoints"]
        for k, v in eps.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise DomainError("endpoints must map stakeholder tags to URLs")
    if "sources" in kwargs:
        kwargs["sources"] = tuple(_parse_source(s) for s in kwargs["sources"])
    cfg = ServiceConfig(**kwargs)
    if cfg.port <= 0 or cfg.port > 65535:
        raise DomainError("port out of range")
    if cfg.retention <= 0:
        raise DomainError("retention must be positive")
    if cfg.alert_capacity <= 0:
        raise DomainError("alert_capacity must be positive")
    if cfg.rules_poll_seconds <= 0:
        raise DomainError("rules_poll_seconds must be positive")
    if cfg.max_attempts < 1 or cfg.in_flight < 1:
        raise DomainError("max_attempts and in_flight must be at least 1")
    if cfg.intensity_threshold < 0 or cfg.intensity_threshold > 255:
        raise DomainError("intensity_threshold must be a byte value")
    return cfg


def load_config(path: str | None = None) -> ServiceConfig:
    """Load configuration; a missing path means the environment or defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return ServiceConfig()
    with open(path, "rb") as fh:
        try:
            obj = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise DomainError(f"invalid config file {path}: {exc}") from exc
    return config_from_obj(obj)
