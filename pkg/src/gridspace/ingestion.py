"""External data in: coverage grids and quantity tables become models.

A frame file is plain text: a magic line, a header line, then the cell grid
top row first.  Sources replay frame files or poll an HTTP endpoint, feeding
a sink one deduplicated frame at a time.
"""

from __future__ import annotations

import csv
import io
import logging
import re
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .errors import DimensionMismatch, FetchError, ParseError
from .invariants import (
    TRUE,
    BigAnd,
    Implies,
    Invariant,
    OccupyPoint,
    Owner,
    Quantity,
    Tick,
    TimeInterval,
    normalize,
)

log = logging.getLogger("gridspace.ingestion")

FRAME_MAGIC = "GRIDFRAME 1"
MAX_BACKOFF_MULTIPLIER = 16

_HEADER_RE = re.compile(
    r"t=(-?\d+) validity=(\d+) origin=(-?\d+),(-?\d+) size=(\d+)x(\d+)\Z"
)


@dataclass(frozen=True)
class GridFrame:
    """One rasterized observation.  ``cells`` is row-major from the lower-left
    origin; 0 is clear, 1..255 coverage intensity."""

    timestamp: Tick
    validity: Tick
    origin_x: int
    origin_y: int
    width: int
    height: int
    cells: bytes

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if self.validity <= 0:
            raise ValueError("frame validity must be positive")
        if len(self.cells) != self.width * self.height:
            raise DimensionMismatch(
                f"{self.width}x{self.height} frame needs {self.width * self.height} cells, "
                f"got {len(self.cells)}"
            )

    def cell(self, i: int, j: int) -> int:
        return self.cells[j * self.width + i]

    def covered_count(self, threshold: int) -> int:
        return sum(1 for v in self.cells if v >= threshold)


VALID_SOURCE_KINDS = ("file-replay", "http-pull")


@dataclass(frozen=True)
class SourceConfig:
    kind: str
    uri: str
    poll_interval: Tick = 60
    owner_tag: str = "cloud"
    intensity_threshold: int = 1

    def __post_init__(self) -> None:
        if self.kind not in VALID_SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "http-pull" and self.poll_interval <= 0:
            raise ValueError("http-pull requires a positive poll interval")
        if not 1 <= self.intensity_threshold <= 255:
            raise ValueError("intensity threshold must be in 1..255")


def parse_grid_frame(text: str) -> GridFrame:
    """Decode one frame in the text format; rows arrive top first."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0].strip() != FRAME_MAGIC:
        raise ParseError(1, 1, f"expected {FRAME_MAGIC!r} magic line")
    if len(lines) < 2:
        raise ParseError(2, 1, "missing frame header line")
    m = _HEADER_RE.match(lines[1].strip())
    if m is None:
        raise ParseError(2, 1, f"malformed frame header: {lines[1]!r}")
    timestamp, validity, ox, oy, w, h = (int(g) for g in m.groups())
    if w <= 0 or h <= 0:
        raise ParseError(2, 1, "frame dimensions must be positive")
    if validity <= 0:
        raise ParseError(2, 1, "frame validity must be positive")
    rows = lines[2:]
    if len(rows) != h:
        raise DimensionMismatch(f"header says {h} rows, found {len(rows)}")
    cells = bytearray(w * h)
    for i, row in enumerate(rows):
        tokens = row.split()
        if len(tokens) != w:
            raise DimensionMismatch(
                f"row {i + 1}: header says {w} cells, found {len(tokens)}"
            )
        j = h - 1 - i
        for x, token in enumerate(tokens):
            try:
                value = int(token)
            except ValueError as exc:
                raise ParseError(3 + i, x + 1, f"not an integer: {token!r}") from exc
            if not 0 <= value <= 255:
                raise ParseError(3 + i, x + 1, f"cell value out of 0..255: {value}")
            cells[j * w + x] = value
    return GridFrame(timestamp, validity, ox, oy, w, h, bytes(cells))


def parse_frames(text: str) -> list[GridFrame]:
    """Decode a fixture holding one or more concatenated frames."""
    blocks: list[list[str]] = []
    for line in text.splitlines():
        if line.strip() == FRAME_MAGIC:
            blocks.append([line])
        elif blocks:
            blocks[-1].append(line)
        elif line.strip():
            raise ParseError(1, 1, f"expected {FRAME_MAGIC!r} magic line")
    return [parse_grid_frame("\n".join(b)) for b in blocks]


def frame_to_invariant(frame: GridFrame, cfg: SourceConfig) -> Invariant:
    """The model a frame asserts: covered cells guarded by time and owner.

    Cells at or above the intensity threshold become points at
    (originX + i, originY + j); an all-clear frame asserts nothing.
    """
    points = [
        OccupyPoint(frame.origin_x + i, frame.origin_y + j)
        for j in range(frame.height)
        for i in range(frame.width)
        if frame.cell(i, j) >= cfg.intensity_threshold
    ]
    if not points:
        return TRUE
    guard = BigAnd(
        (
            TimeInterval(frame.timestamp, frame.timestamp + frame.validity),
            Owner(cfg.owner_tag),
        )
    )
    return Implies(guard, BigAnd(tuple(points)))


QUANTITY_CSV_COLUMNS = ("x", "y", "t1", "t2", "kind", "value", "unit")


def parse_quantity_csv(text: str, owner_tag: str | None = None) -> Invariant:
    """Decode a quantity table (columns x, y, t1, t2, kind, value, unit) into
    one clause per row."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        return TRUE
    header = tuple(cell.strip() for cell in rows[0])
    if header != QUANTITY_CSV_COLUMNS:
        raise ParseError(1, 1, f"expected columns {','.join(QUANTITY_CSV_COLUMNS)}")
    clauses: list[Invariant] = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(QUANTITY_CSV_COLUMNS):
            raise ParseError(n, 1, f"expected {len(QUANTITY_CSV_COLUMNS)} columns")
        try:
            x, y, t1, t2 = (int(v.strip()) for v in row[:4])
        except ValueError as exc:
            raise ParseError(n, 1, f"bad integer field: {exc}") from exc
        kind = row[4].strip()
        unit = row[6].strip()
        try:
            quantity = Quantity(kind, row[5].strip(), unit)
        except ValueError as exc:
            raise ParseError(n, 6, str(exc)) from exc
        if t1 > t2:
            raise ParseError(n, 3, f"interval start {t1} after end {t2}")
        guard_atoms: list[Invariant] = [TimeInterval(t1, t2)]
        if owner_tag:
            guard_atoms.append(Owner(owner_tag))
        guard = guard_atoms[0] if len(guard_atoms) == 1 else BigAnd(tuple(guard_atoms))
        clauses.append(Implies(guard, BigAnd((quantity, OccupyPoint(x, y)))))
    return normalize(BigAnd(tuple(clauses)))


class SourceHandle:
    """A running source loop; stop() is graceful and idempotent."""

    def __init__(self, cfg: SourceConfig) -> None:
        self.cfg = cfg
        self.frames_emitted = 0
        self.duplicates_dropped = 0
        self.parse_errors = 0
        self.fetch_errors = 0
        self.last_error: Exception | None = None
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    @property
    def stopped(self) -> bool:
        return self._stop.is_set()

    def stop(self) -> None:
        self._stop.set()

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)


class _NullClock:
    """Replay clock: no wall-time pacing, frame timestamps carry time."""

    def sleep(self, seconds: float) -> None:  # pragma: no cover - trivial
        return


def _fetch_http(uri: str, timeout: float = 10.0) -> str:
    try:
        with urllib.request.urlopen(uri, timeout=timeout) as resp:
            status = getattr(resp, "status", 200)
            body = resp.read().decode("utf-8")
    except (urllib.error.URLError, OSError, UnicodeDecodeError) as exc:
        raise FetchError(uri, str(exc)) from exc
    if status != 200:
        raise FetchError(uri, f"status {status}")
    return body


def run_source(
    cfg: SourceConfig,
    sink: Callable[[GridFrame], None],
    clock=None,
    fetch: Callable[[str], str] | None = None,
) -> SourceHandle:
    """Start the fetch loop for one source in a daemon thread.

    ``clock`` needs only sleep(seconds); tests pass a recording stub.  The
    sink is invoked from the loop thread only.
    """
    handle = SourceHandle(cfg)
    if cfg.kind == "file-replay":
        target = lambda: _replay_loop(cfg, sink, handle, clock or _NullClock())
    else:
        target = lambda: _pull_loop(cfg, sink, handle, clock, fetch or _fetch_http)
    thread = threading.Thread(target=target, name=f"source-{cfg.uri}", daemon=True)
    handle._thread = thread
    thread.start()
    return handle


def _emit(frame: GridFrame, sink, handle: SourceHandle, seen: set[Tick]) -> None:
    if frame.timestamp in seen:
        handle.duplicates_dropped += 1
        return
    seen.add(frame.timestamp)
    try:
        sink(frame)
        handle.frames_emitted += 1
    except Exception:
        log.exception("sink failed for frame t=%d", frame.timestamp)


def _replay_loop(cfg: SourceConfig, sink, handle: SourceHandle, clock) -> None:
    try:
        with open(cfg.uri, "r", encoding="utf-8") as f:
            frames = parse_frames(f.read())
    except (OSError, ParseError, DimensionMismatch) as exc:
        handle.last_error = exc
        handle.parse_errors += 1
        log.error("replay source %s: %s", cfg.uri, exc)
        return
    seen: set[Tick] = set()
    for i, frame in enumerate(frames):
        if handle.stopped:
            return
        if i > 0:
            clock.sleep(cfg.poll_interval)
        _emit(frame, sink, handle, seen)


def _pull_loop(cfg: SourceConfig, sink, handle: SourceHandle, clock, fetch) -> None:
    seen: set[Tick] = set()
    multiplier = 1
    while not handle.stopped:
        try:
            body = fetch(cfg.uri)
        except FetchError as exc:
            handle.fetch_errors += 1
            handle.last_error = exc
            log.warning("source %s: %s (retry in %dx)", cfg.uri, exc, multiplier)
            _sleep(clock, handle, cfg.poll_interval * multiplier)
            multiplier = min(multiplier * 2, MAX_BACKOFF_MULTIPLIER)
            continue
        multiplier = 1
        try:
            frame = parse_grid_frame(body)
        except (ParseError, DimensionMismatch) as exc:
            handle.parse_errors += 1
            handle.last_error = exc
            log.warning("source %s: skipped frame: %s", cfg.uri, exc)
        else:
            _emit(frame, sink, handle, seen)
        _sleep(clock, handle, cfg.poll_interval)


def _sleep(clock, handle: SourceHandle, seconds: float) -> None:
    if clock is None:
        handle._stop.wait(timeout=seconds)
    else:
        clock.sleep(seconds)
