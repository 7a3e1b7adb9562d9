"""In-memory clause store with immutable snapshots.

One writer mutates by swapping a frozen state value; readers take the
current state and never see later inserts.  Clauses are indexed by coarse
time buckets and coarse spatial buckets so rule evaluation only touches
candidates; the exact guard and geometry checks stay with the evaluator.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .invariants import (
    TICK_MAX,
    TICK_MIN,
    Clause,
    Invariant,
    Occupy3DBox,
    OccupyBox,
    OccupyPoint,
    Tick,
    clauses_to_invariant,
    to_clauses,
)

DEFAULT_RETENTION = 86_400
DEFAULT_TIME_BUCKET = 64
DEFAULT_SPACE_BUCKET = 64
_MAX_TIME_BUCKETS_PER_CLAUSE = 4096


def _geometry_bbox(clause: Clause) -> tuple[int, int, int, int] | None:
    xs: list[int] = []
    ys: list[int] = []
    for g in clause.geometry:
        if isinstance(g, OccupyPoint):
            xs += [g.x]
            ys += [g.y]
        elif isinstance(g, OccupyBox):
            xs += [g.x1, g.x2]
            ys += [g.y1, g.y2]
        elif isinstance(g, Occupy3DBox):
            xs += [g.x1, g.x2]
            ys += [g.y1, g.y2]
    if not xs:
        return None
    return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class StoreState:
    clauses: tuple[Clause, ...] = ()
    revision: int = 0
    time_index: dict[int, tuple[int, ...]] = None  # type: ignore[assignment]
    space_index: dict[tuple[int, int], tuple[int, ...]] = None  # type: ignore[assignment]
    time_unbounded: tuple[int, ...] = ()
    space_unbounded: tuple[int, ...] = ()
    dedup_keys: frozenset = frozenset()
    time_bucket: int = DEFAULT_TIME_BUCKET
    space_bucket: int = DEFAULT_SPACE_BUCKET

    def __post_init__(self) -> None:
        if self.time_index is None:
            object.__setattr__(self, "time_index", {})
        if self.space_index is None:
            object.__setattr__(self, "space_index", {})


def _time_buckets(clause: Clause, span: int) -> list[int] | None:
    """Bucket range of the clause's guard; None means index as unbounded."""
    t1, t2 = clause.time_span()
    if t1 == TICK_MIN or t2 == TICK_MAX:
        return None
    lo, hi = t1 // span, t2 // span
    if hi - lo + 1 > _MAX_TIME_BUCKETS_PER_CLAUSE:
        return None
    return list(range(lo, hi + 1))


def _space_buckets(clause: Clause, span: int) -> list[tuple[int, int]] | None:
    bbox = _geometry_bbox(clause)
    if bbox is None:
        return None
    x1, y1, x2, y2 = bbox
    return [
        (bx, by)
        for by in range(y1 // span, y2 // span + 1)
        for bx in range(x1 // span, x2 // span + 1)
    ]


def _index_clauses(
    clauses: Sequence[Clause],
    start: int,
    time_index: dict[int, tuple[int, ...]],
    space_index: dict[tuple[int, int], tuple[int, ...]],
    time_unbounded: list[int],
    space_unbounded: list[int],
    time_span: int,
    space_span: int,
) -> None:
    for offset, clause in enumerate(clauses):
        idx = start + offset
        tb = _time_buckets(clause, time_span)
        if tb is None:
            time_unbounded.append(idx)
        else:
            for b in tb:
                time_index[b] = time_index.get(b, ()) + (idx,)
        sb = _space_buckets(clause, space_span)
        if sb is None:
            space_unbounded.append(idx)
        else:
            for b in sb:
                space_index[b] = space_index.get(b, ()) + (idx,)


def _build_state(
    clauses: Sequence[Clause],
    revision: int,
    dedup_keys: frozenset,
    time_span: int,
    space_span: int,
) -> StoreState:
    time_index: dict[int, tuple[int, ...]] = {}
    space_index: dict[tuple[int, int], tuple[int, ...]] = {}
    time_unbounded: list[int] = []
    space_unbounded: list[int] = []
    _index_clauses(
        clauses, 0, time_index, space_index, time_unbounded, space_unbounded,
        time_span, space_span,
    )
    return StoreState(
        tuple(clauses), revision, time_index, space_index,
        tuple(time_unbounded), tuple(space_unbounded), dedup_keys,
        time_span, space_span,
    )


class ModelStore:
    """Single-writer clause store; every read goes through a snapshot."""

    def __init__(
        self,
        retention: Tick = DEFAULT_RETENTION,
        time_bucket: int = DEFAULT_TIME_BUCKET,
        space_bucket: int = DEFAULT_SPACE_BUCKET,
    ) -> None:
        if retention <= 0:
            raise ValueError("retention must be positive")
        self.retention = retention
        self._lock = threading.Lock()
        self._state = StoreState(time_bucket=time_bucket, space_bucket=space_bucket)

    def snapshot(self) -> StoreState:
        return self._state

    def insert_model(
        self,
        model: Invariant,
        dedup_key: Hashable | None = None,
        now: Tick | None = None,
    ) -> tuple[int, bool]:
        """Insert a model's clauses; returns (revision, inserted).

        A repeated dedup key leaves the store untouched.  When ``now`` is
        given, clauses whose guard ended before the retention horizon are
        evicted in the same swap.
        """
        new_clauses = to_clauses(model)
        with self._lock:
            state = self._state
            if dedup_key is not None and dedup_key in state.dedup_keys:
                return state.revision, False
            keys = state.dedup_keys if dedup_key is None else state.dedup_keys | {dedup_key}
            horizon = None if now is None else now - self.retention
            if horizon is not None and any(
                c.time_span()[1] < horizon for c in state.clauses
            ):
                kept = [c for c in state.clauses if c.time_span()[1] >= horizon]
                kept.extend(new_clauses)
                next_state = _build_state(
                    kept, state.revision + 1, keys, state.time_bucket, state.space_bucket
                )
            else:
                time_index = dict(state.time_index)
                space_index = dict(state.space_index)
                time_unbounded = list(state.time_unbounded)
                space_unbounded = list(state.space_unbounded)
                _index_clauses(
                    new_clauses, len(state.clauses), time_index, space_index,
                    time_unbounded, space_unbounded,
                    state.time_bucket, state.space_bucket,
                )
                next_state = StoreState(
                    state.clauses + tuple(new_clauses), state.revision + 1,
                    time_index, space_index,
                    tuple(time_unbounded), tuple(space_unbounded), keys,
                    state.time_bucket, state.space_bucket,
                )
            self._state = next_state
            return next_state.revision, True

    def bulk_load(self, models: Iterable[Invariant], now: Tick | None = None) -> int:
        """Insert many models in one state swap; returns the new revision."""
        clauses: list[Clause] = []
        count = 0
        for model in models:
            clauses.extend(to_clauses(model))
            count += 1
        with self._lock:
            state = self._state
            kept = list(state.clauses)
            if now is not None:
                horizon = now - self.retention
                kept = [c for c in kept if c.time_span()[1] >= horizon]
            kept.extend(clauses)
            next_state = _build_state(
                kept, state.revision + count, state.dedup_keys,
                state.time_bucket, state.space_bucket,
            )
            self._state = next_state
            return next_state.revision


def candidate_clauses(
    state: StoreState,
    t1: Tick,
    t2: Tick,
    areas: Sequence[OccupyBox] | None = None,
) -> list[Clause]:
    """Clauses that could hold somewhere in [t1, t2] (and touch ``areas``).

    A superset filter: exact guard and geometry checks remain the caller's.
    Returned in insertion order.
    """
    span = state.time_bucket
    time_cand: set[int] = set(state.time_unbounded)
    lo, hi = t1 // span, t2 // span
    if hi - lo + 1 <= len(state.time_index):
        for b in range(lo, hi + 1):
            time_cand.update(state.time_index.get(b, ()))
    else:
        for b, members in state.time_index.items():
            if lo <= b <= hi:
                time_cand.update(members)
    if areas is None:
        indices = sorted(time_cand)
        return [state.clauses[i] for i in indices]
    sspan = state.space_bucket
    space_cand: set[int] = set(state.space_unbounded)
    for area in areas:
        for by in range(area.y1 // sspan, area.y2 // sspan + 1):
            for bx in range(area.x1 // sspan, area.x2 // sspan + 1):
                space_cand.update(state.space_index.get((bx, by), ()))
    indices = sorted(time_cand & space_cand)
    return [state.clauses[i] for i in indices]


def state_model(state: StoreState) -> Invariant:
    """The full stored model as one invariant."""
    return clauses_to_invariant(list(state.clauses))


def window_model(
    state: StoreState,
    t1: Tick,
    t2: Tick,
    areas: Sequence[OccupyBox] | None = None,
) -> Invariant:
    """The candidate submodel for a window (see candidate_clauses)."""
    return clauses_to_invariant(candidate_clauses(state, t1, t2, areas))
