"""Aggregation and filtering over monitoring models.

Folds walk a time window or a translated area path and hand the callback the
model restricted to each step.  Filters restrict a model by tick or by area.
``overlaps`` reports where and when two models claim the same cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, TypeVar

from .errors import CapExceeded, FoldStepError, PathUnreachable
from .invariants import (
    DEFAULT_POINT_CAP,
    And,
    BigAnd,
    Clause,
    Implies,
    Invariant,
    Occupy3DBox,
    OccupyBox,
    OccupyPoint,
    Owner,
    Tick,
    TimeInterval,
    TimePoint,
    clauses_to_invariant,
    decompose_box_to_points,
    to_clauses,
)

A = TypeVar("A")


@dataclass(frozen=True)
class TimeWindow:
    """Inclusive tick range walked from ``start`` to ``stop`` by ``step``."""

    start: Tick
    stop: Tick
    step: Tick = 1

    def __post_init__(self) -> None:
        if self.start > self.stop:
            raise ValueError(f"window start {self.start} after stop {self.stop}")
        if self.step <= 0:
            raise ValueError(f"window step must be positive, got {self.step}")

    def ticks(self) -> range:
        return range(self.start, self.stop + 1, self.step)

    @property
    def tick_count(self) -> int:
        return (self.stop - self.start) // self.step + 1


@dataclass(frozen=True)
class SpacePath:
    """Start area translated by whole multiples of ``step_offset`` to the stop
    area.  Both areas must have equal dimensions and the offset must be
    nonzero; reachability is checked when the path is walked."""

    start_area: OccupyBox
    stop_area: OccupyBox
    step_offset: tuple[int, int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "step_offset", tuple(self.step_offset))
        if (
            self.start_area.width != self.stop_area.width
            or self.start_area.height != self.stop_area.height
        ):
            raise ValueError("start and stop areas must have equal dimensions")
        if self.step_offset == (0, 0):
            raise ValueError("step offset must be nonzero")

    def areas(self) -> list[OccupyBox]:
        """All windows from start to stop inclusive.

        Raises PathUnreachable when no whole number of steps lands on stop.
        """
        dx_total = self.stop_area.x1 - self.start_area.x1
        dy_total = self.stop_area.y1 - self.start_area.y1
        sx, sy = self.step_offset
        steps: int | None = None
        for delta, s in ((dx_total, sx), (dy_total, sy)):
            if s == 0:
                if delta != 0:
                    raise PathUnreachable(
                        f"offset {self.step_offset} cannot cover displacement ({dx_total}, {dy_total})"
                    )
                continue
            if delta % s != 0 or delta // s < 0:
                raise PathUnreachable(
                    f"offset {self.step_offset} cannot cover displacement ({dx_total}, {dy_total})"
                )
            k = delta // s
            if steps is not None and steps != k:
                raise PathUnreachable(
                    f"axes need different step counts ({steps} vs {k})"
                )
            steps = k
        assert steps is not None
        return [self.start_area.translate(i * sx, i * sy) for i in range(steps + 1)]


def _without_time_guard(clause: Clause) -> Clause:
    return Clause(
        None, clause.owner, clause.event, clause.quantities, clause.geometry, clause.topology
    )


def _filter_clauses_by_time(clauses: list[Clause], t: Tick) -> list[Clause]:
    kept: list[Clause] = []
    for c in clauses:
        if c.time_guard is None:
            kept.append(c)
        elif c.holds_at(t):
            stripped = _without_time_guard(c)
            if stripped.guard_atoms() or stripped.body_atoms():
                kept.append(stripped)
    return kept


def filter_by_time(inv: Invariant, t: Tick) -> Invariant:
    """Restrict a model to tick ``t``.

    Guardless clauses pass unchanged; a clause whose time guard admits ``t``
    keeps its body under any remaining owner or event guard; others drop.
    """
    return clauses_to_invariant(_filter_clauses_by_time(to_clauses(inv), t))


def clip_clause(clause: Clause, window: OccupyBox) -> Clause | None:
    clipped: list = []
    for g in clause.geometry:
        if isinstance(g, OccupyPoint):
            if window.contains(g.x, g.y):
                clipped.append(g)
        elif isinstance(g, OccupyBox):
            inter = g.intersect(window)
            if inter is not None:
                clipped.append(inter)
        elif isinstance(g, Occupy3DBox):
            inter = g.footprint.intersect(window)
            if inter is not None:
                clipped.append(
                    Occupy3DBox(inter.x1, inter.y1, g.z1, inter.x2, inter.y2, g.z2)
                )
    if not clipped:
        return None
    return Clause(
        clause.time_guard,
        clause.owner,
        clause.event,
        clause.quantities,
        tuple(clipped),
        clause.topology,
    )


def _filter_clauses_by_area(clauses: list[Clause], window: OccupyBox) -> list[Clause]:
    kept = []
    for c in clauses:
        clipped = clip_clause(c, window)
        if clipped is not None:
            kept.append(clipped)
    return kept


def filter_by_area(inv: Invariant, window: OccupyBox) -> Invariant:
    """Restrict a model's geometry to ``window``.

    Points are kept by containment, boxes clipped to their intersection, and
    clauses left with no geometry drop entirely.
    """
    return clauses_to_invariant(_filter_clauses_by_area(to_clauses(inv), window))


def fold_time(
    inv: Invariant,
    seed: A,
    window: TimeWindow,
    f: Callable[[A, Invariant], A],
) -> A:
    """Left-fold ``f`` over the model restricted to each tick of ``window``."""
    clauses = to_clauses(inv)
    acc = seed
    for i, t in enumerate(window.ticks()):
        step_model = clauses_to_invariant(_filter_clauses_by_time(clauses, t))
        try:
            acc = f(acc, step_model)
        except Exception as exc:
            raise FoldStepError(i, t, str(exc)) from exc
    return acc


def fold_space(
    inv: Invariant,
    seed: A,
    path: SpacePath,
    f: Callable[[A, Invariant], A],
) -> A:
    """Left-fold ``f`` over the model clipped to each window along ``path``."""
    clauses = to_clauses(inv)
    acc = seed
    for i, area in enumerate(path.areas()):
        step_model = clauses_to_invariant(_filter_clauses_by_area(clauses, area))
        try:
            acc = f(acc, step_model)
        except Exception as exc:
            raise FoldStepError(i, (area.x1, area.y1), str(exc)) from exc
    return acc


def _point_count(body: Invariant) -> int:
    if isinstance(body, OccupyPoint):
        return 1
    if isinstance(body, And):
        return _point_count(body.left) + _point_count(body.right)
    if isinstance(body, BigAnd):
        return sum(_point_count(a) for a in body.items)
    return 0


def _counts_toward(item: Invariant, owner_tag: str) -> int:
    """Covered-cell contribution of one conjunct for ``owner_tag``."""
    if not isinstance(item, Implies):
        return 0
    guard = item.guard
    owner_atoms: list[Owner] = []
    if isinstance(guard, Owner):
        owner_atoms = [guard]
    elif isinstance(guard, BigAnd):
        owner_atoms = [a for a in guard.items if isinstance(a, Owner)]
    elif isinstance(guard, And):
        owner_atoms = [a for a in (guard.left, guard.right) if isinstance(a, Owner)]
    if not any(a.tag == owner_tag for a in owner_atoms):
        return 0
    return _point_count(item.body)


def cloudy_area_count(acc: int, inv: Invariant, owner_tag: str = "cloud") -> int:
    """Add the number of cells ``owner_tag`` occupies in ``inv`` to ``acc``.

    Counts OccupyPoint bodies of clauses guarded by the owner; boxes and
    other owners contribute nothing.
    """
    if isinstance(inv, (And, BigAnd)):
        children = (inv.left, inv.right) if isinstance(inv, And) else inv.items
        return acc + sum(_counts_toward(item, owner_tag) for item in children)
    return acc + _counts_toward(inv, owner_tag)


def coverage_counter(owner_tag: str) -> Callable[[int, Invariant], int]:
    """A fold callback counting ``owner_tag`` cells across steps."""

    def step(acc: int, model: Invariant) -> int:
        return cloudy_area_count(acc, model, owner_tag)

    return step


@dataclass(frozen=True)
class Overlap:
    """A joint claim: both owners occupy every cell of ``region`` throughout
    ``time_span``."""

    time_span: TimeInterval
    region: tuple[OccupyPoint, ...]
    owner_a: str
    owner_b: str


def _cells_of(geom, cap: int) -> set[tuple[int, int]]:
    if isinstance(geom, OccupyPoint):
        return {(geom.x, geom.y)}
    if isinstance(geom, OccupyBox):
        return {(p.x, p.y) for p in decompose_box_to_points(geom, cap)}
    return set()


def _pair_region(a: Clause, b: Clause, cap: int) -> set[tuple[int, int]]:
    cells: set[tuple[int, int]] = set()
    for ga in a.geometry:
        if isinstance(ga, Occupy3DBox):
            continue
        for gb in b.geometry:
            if isinstance(gb, Occupy3DBox):
                continue
            if isinstance(ga, OccupyBox) and isinstance(gb, OccupyBox):
                inter = ga.intersect(gb)
                if inter is not None:
                    if inter.cell_count > cap:
                        raise CapExceeded(inter.cell_count, cap)
                    cells.update((p.x, p.y) for p in decompose_box_to_points(inter, cap))
            elif isinstance(ga, OccupyBox):
                assert isinstance(gb, OccupyPoint)
                if ga.contains(gb.x, gb.y):
                    cells.add((gb.x, gb.y))
            elif isinstance(gb, OccupyBox):
                if gb.contains(ga.x, ga.y):
                    cells.add((ga.x, ga.y))
            else:
                if (ga.x, ga.y) == (gb.x, gb.y):
                    cells.add((ga.x, ga.y))
    return cells


def overlaps(
    model_a: Invariant, model_b: Invariant, cap: int = DEFAULT_POINT_CAP
) -> list[Overlap]:
    """All spatio-temporal claims the two models make on the same cells.

    Results are ordered lexicographically by (span start, owner a, owner b);
    a clause without a time guard spans all of time.
    """
    out: list[Overlap] = []
    for ca in to_clauses(model_a):
        sa1, sa2 = ca.time_span()
        for cb in to_clauses(model_b):
            sb1, sb2 = cb.time_span()
            t1, t2 = max(sa1, sb1), min(sa2, sb2)
            if t1 > t2:
                continue
            cells = _pair_region(ca, cb, cap)
            if not cells:
                continue
            region = tuple(
                OccupyPoint(x, y) for (y, x) in sorted((y, x) for (x, y) in cells)
            )
            out.append(Overlap(TimeInterval(t1, t2), region, ca.owner_tag, cb.owner_tag))
    out.sort(
        key=lambda o: (
            o.time_span.t1,
            o.owner_a,
            o.owner_b,
            o.time_span.t2,
            tuple((p.y, p.x) for p in o.region),
        )
    )
    return out
