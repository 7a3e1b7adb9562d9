"""Trigger output: stakeholder-routed XML display instructions.

Rendering is pure and byte-deterministic so fired documents can be compared
against golden files.  Routing POSTs each document to every mapped
stakeholder endpoint with bounded retries and an idempotency key.
"""

from __future__ import annotations

import logging
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Mapping

from .invariants import OccupyBox

if TYPE_CHECKING:  # pragma: no cover - import cycle guard
    from .rules import Rule, Trigger

log = logging.getLogger("gridspace.reactions")

DISPLAY_KINDS = ("map-overlay", "url", "text-alert")
IDEMPOTENCY_HEADER = "X-Gridspace-Idempotency-Key"
DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_IN_FLIGHT = 8


@dataclass(frozen=True)
class WallHint:
    """Advisory placement of a window on a named video wall."""

    wall: str
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError("wall hint dimensions must be positive")


@dataclass(frozen=True)
class DisplayInstruction:
    kind: str
    base_layer: str | None = None
    boxes: tuple[OccupyBox, ...] = ()
    url: str | None = None
    text: str | None = None
    wall_hint: WallHint | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if self.kind not in DISPLAY_KINDS:
            raise ValueError(f"unknown display kind {self.kind!r}")
        if self.kind == "url" and not self.url:
            raise ValueError("url display needs a url")
        if self.kind == "text-alert" and not self.text:
            raise ValueError("text-alert display needs text")
        if self.kind == "map-overlay" and not self.base_layer:
            raise ValueError("map-overlay display needs a base layer name")


@dataclass(frozen=True)
class ReactionSpec:
    displays: tuple[DisplayInstruction, ...]
    severity: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "displays", tuple(self.displays))
        if not self.displays:
            raise ValueError("a reaction needs at least one display instruction")

    def to_json_obj(self) -> dict:
        out: dict = {"displays": [_display_to_obj(d) for d in self.displays]}
        if self.severity is not None:
            out["severity"] = self.severity
        return out


def _display_to_obj(d: DisplayInstruction) -> dict:
    obj: dict = {"kind": d.kind}
    if d.base_layer is not None:
        obj["base_layer"] = d.base_layer
    if d.boxes:
        obj["boxes"] = [{"x1": b.x1, "y1": b.y1, "x2": b.x2, "y2": b.y2} for b in d.boxes]
    if d.url is not None:
        obj["url"] = d.url
    if d.text is not None:
        obj["text"] = d.text
    if d.wall_hint is not None:
        h = d.wall_hint
        obj["wall_hint"] = {"wall": h.wall, "x": h.x, "y": h.y, "w": h.w, "h": h.h}
    return obj


def parse_reaction_spec(obj: object) -> ReactionSpec:
    """Validate the reaction block of a rule document."""
    if not isinstance(obj, dict):
        raise ValueError("reaction must be an object")
    extra = set(obj) - {"displays", "severity"}
    if extra:
        raise ValueError(f"unknown fields {sorted(extra)}")
    displays_obj = obj.get("displays")
    if not isinstance(displays_obj, list) or not displays_obj:
        raise ValueError("displays must be a non-empty array")
    displays = []
    for i, d in enumerate(displays_obj):
        if not isinstance(d, dict):
            raise ValueError(f"displays[{i}] must be an object")
        kind = d.get("kind")
        if kind not in DISPLAY_KINDS:
            raise ValueError(f"displays[{i}]: unknown kind {kind!r}")
        boxes = []
        for j, b in enumerate(d.get("boxes", [])):
            if not isinstance(b, dict) or set(b) != {"x1", "y1", "x2", "y2"}:
                raise ValueError(f"displays[{i}].boxes[{j}] needs exactly x1,y1,x2,y2")
            boxes.append(OccupyBox(b["x1"], b["y1"], b["x2"], b["y2"]))
        hint = None
        if "wall_hint" in d:
            h = d["wall_hint"]
            if not isinstance(h, dict) or set(h) != {"wall", "x", "y", "w", "h"}:
                raise ValueError(f"displays[{i}].wall_hint needs wall,x,y,w,h")
            hint = WallHint(h["wall"], h["x"], h["y"], h["w"], h["h"])
        displays.append(
            DisplayInstruction(
                kind=kind,
                base_layer=d.get("base_layer"),
                boxes=tuple(boxes),
                url=d.get("url"),
                text=d.get("text"),
                wall_hint=hint,
            )
        )
    severity = obj.get("severity")
    if severity is not None and not isinstance(severity, str):
        raise ValueError("severity must be a string")
    return ReactionSpec(tuple(displays), severity)


@dataclass(frozen=True)
class ReactionDoc:
    rule_id: str
    severity: str
    fired_at: int
    stakeholders: tuple[str, ...]
    xml: str

    @property
    def idempotency_key(self) -> str:
        return f"{self.rule_id}:{self.fired_at}"


def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _fmt_number(value: float) -> str:
    if float(value) == int(value):
        return str(int(value))
    return repr(float(value))


def render_reaction(trigger: "Trigger", rule: "Rule") -> ReactionDoc:
    """Render the XML document for one fired rule.

    One <target> per stakeholder in rule order; overlay displays carry the
    rule's areas as <highlight> boxes with the measured values.
    """
    parts: list[str] = [
        f'<reaction rule="{_escape(trigger.rule_id)}" '
        f'severity="{_escape(trigger.severity_label)}" '
        f'firedAt="{trigger.fired_at}">'
    ]
    for stakeholder in rule.stakeholders:
        parts.append(f'<target stakeholder="{_escape(stakeholder)}"/>')
    for display in rule.reaction.displays:
        parts.append(_render_display(display, trigger))
    parts.append("</reaction>")
    return ReactionDoc(
        rule_id=trigger.rule_id,
        severity=trigger.severity_label,
        fired_at=trigger.fired_at,
        stakeholders=rule.stakeholders,
        xml="".join(parts),
    )


def _render_display(display: DisplayInstruction, trigger: "Trigger") -> str:
    attrs = [f'kind="{display.kind}"']
    if display.kind == "map-overlay":
        attrs.append(f'baseLayer="{_escape(display.base_layer or "")}"')
    if display.kind == "url":
        attrs.append(f'url="{_escape(display.url or "")}"')
    if display.kind == "text-alert":
        attrs.append(f'text="{_escape(display.text or "")}"')
    children: list[str] = []
    if display.kind == "map-overlay":
        for area, measured in trigger.per_area:
            children.append(
                f'<highlight x1="{area.x1}" y1="{area.y1}" x2="{area.x2}" y2="{area.y2}" '
                f'measured="{_fmt_number(measured)}"/>'
            )
        for box in display.boxes:
            children.append(
                f'<box x1="{box.x1}" y1="{box.y1}" x2="{box.x2}" y2="{box.y2}"/>'
            )
    if display.wall_hint is not None:
        h = display.wall_hint
        children.append(
            f'<wallhint wall="{_escape(h.wall)}" x="{h.x}" y="{h.y}" w="{h.w}" h="{h.h}"/>'
        )
    head = f'<display {" ".join(attrs)}'
    if not children:
        return head + "/>"
    return head + ">" + "".join(children) + "</display>"


@dataclass(frozen=True)
class Delivery:
    stakeholder: str
    doc_key: str
    status: str
    attempts: int
    endpoint: str | None = None

    @property
    def label(self) -> str:
        if self.status == "failed":
            return f"failed({self.attempts})"
        return self.status

    def to_json_obj(self) -> dict:
        return {
            "stakeholder": self.stakeholder,
            "doc": self.doc_key,
            "status": self.label,
            "attempts": self.attempts,
        }


def _post_xml(endpoint: str, doc: ReactionDoc, timeout: float = 10.0) -> None:
    request = urllib.request.Request(
        endpoint,
        data=doc.xml.encode("utf-8"),
        method="POST",
        headers={
            "Content-Type": "application/xml",
            IDEMPOTENCY_HEADER: doc.idempotency_key,
        },
    )
    with urllib.request.urlopen(request, timeout=timeout) as resp:
        status = getattr(resp, "status", 200)
        if not 200 <= status < 300:
            raise urllib.error.HTTPError(endpoint, status, "non-2xx", resp.headers, None)


def route_reactions(
    docs: list[ReactionDoc],
    registry: Mapping[str, str],
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    in_flight: int = DEFAULT_IN_FLIGHT,
    post: Callable[[str, ReactionDoc], None] | None = None,
) -> list[Delivery]:
    """Deliver every document to each of its stakeholders.

    Unmapped stakeholders are reported, not failed; transport errors retry
    up to ``max_attempts`` total tries.  The report is sorted by stakeholder
    then document key.
    """
    sender = post or _post_xml
    tasks: list[tuple[str, str, ReactionDoc]] = []
    report: list[Delivery] = []
    for doc in docs:
        for stakeholder in doc.stakeholders:
            endpoint = registry.get(stakeholder)
            if endpoint is None:
                report.append(Delivery(stakeholder, doc.idempotency_key, "unmapped", 0))
            else:
                tasks.append((stakeholder, endpoint, doc))

    def deliver(task: tuple[str, str, ReactionDoc]) -> Delivery:
        stakeholder, endpoint, doc = task
        attempts = 0
        while True:
            attempts += 1
            try:
                sender(endpoint, doc)
                return Delivery(stakeholder, doc.idempotency_key, "delivered", attempts, endpoint)
            except Exception as exc:
                if attempts >= max_attempts:
                    log.warning("delivery to %s failed after %d tries: %s", endpoint, attempts, exc)
                    return Delivery(stakeholder, doc.idempotency_key, "failed", attempts, endpoint)

    if tasks:
        with ThreadPoolExecutor(max_workers=min(in_flight, len(tasks))) as pool:
            report.extend(pool.map(deliver, tasks))
    report.sort(key=lambda d: (d.stakeholder, d.doc_key))
    return report
