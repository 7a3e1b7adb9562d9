"""Core formula algebra: immutable AST nodes, normalization, and the clause view.

Models are conjunctive forests of guarded clauses.  Each clause pairs an
optional guard (time, owner, event) with a body of quantity, geometry and
topology atoms; ``to_clauses`` and ``clauses_to_invariant`` convert between
the tree and clause views losslessly for formulas inside that fragment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .errors import CapExceeded, UnsupportedFragment

Tick = int

# Sentinel bounds used when a clause carries no time guard.
TICK_MIN = -(2**63)
TICK_MAX = 2**63 - 1

DEFAULT_POINT_CAP = 10_000_000


class Invariant:
    """Base class for every formula node.  Instances are immutable values."""

    __slots__ = ()


class Atom(Invariant):
    """Base class for leaf nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class And(Invariant):
    left: Invariant
    right: Invariant


@dataclass(frozen=True)
class Or(Invariant):
    left: Invariant
    right: Invariant


@dataclass(frozen=True)
class Not(Invariant):
    inner: Invariant


@dataclass(frozen=True)
class Implies(Invariant):
    guard: Invariant
    body: Invariant


@dataclass(frozen=True)
class BigAnd(Invariant):
    items: tuple[Invariant, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class Truth(Atom):
    pass


@dataclass(frozen=True)
class Falsity(Atom):
    pass


TRUE = Truth()
FALSE = Falsity()


@dataclass(frozen=True)
class TimePoint(Atom):
    t: Tick


@dataclass(frozen=True)
class TimeInterval(Atom):
    t1: Tick
    t2: Tick

    def __post_init__(self) -> None:
        # t1 <= t2 is part of the type; only boxes normalize silently.
        if self.t1 > self.t2:
            raise ValueError(f"interval start {self.t1} after end {self.t2}")


@dataclass(frozen=True)
class Owner(Atom):
    tag: str


@dataclass(frozen=True)
class Event(Atom):
    tag: str


@dataclass(frozen=True)
class OccupyPoint(Atom):
    x: int
    y: int


@dataclass(frozen=True)
class OccupyBox(Atom):
    """Axis-aligned cell box with inclusive corners, stored normalized."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __init__(self, x1: int, y1: int, x2: int, y2: int) -> None:
        if x1 > x2:
            x1, x2 = x2, x1
        if y1 > y2:
            y1, y2 = y2, y1
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "y2", y2)

    @property
    def width(self) -> int:
        return self.x2 - self.x1 + 1

    @property
    def height(self) -> int:
        return self.y2 - self.y1 + 1

    @property
    def cell_count(self) -> int:
        return self.width * self.height

    def contains(self, x: int, y: int) -> bool:
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2

    def intersect(self, other: "OccupyBox") -> "OccupyBox | None":
        x1 = max(self.x1, other.x1)
        y1 = max(self.y1, other.y1)
        x2 = min(self.x2, other.x2)
        y2 = min(self.y2, other.y2)
        if x1 > x2 or y1 > y2:
            return None
        return OccupyBox(x1, y1, x2, y2)

    def translate(self, dx: int, dy: int) -> "OccupyBox":
        return OccupyBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)


@dataclass(frozen=True)
class Occupy3DBox(Atom):
    """3D box with inclusive corners, stored normalized.  Stored and
    serialized; planar reasoning clips its footprint and keeps z intact."""

    x1: int
    y1: int
    z1: int
    x2: int
    y2: int
    z2: int

    def __init__(self, x1: int, y1: int, z1: int, x2: int, y2: int, z2: int) -> None:
        if x1 > x2:
            x1, x2 = x2, x1
        if y1 > y2:
            y1, y2 = y2, y1
        if z1 > z2:
            z1, z2 = z2, z1
        for name, value in (("x1", x1), ("y1", y1), ("z1", z1), ("x2", x2), ("y2", y2), ("z2", z2)):
            object.__setattr__(self, name, value)

    @property
    def footprint(self) -> OccupyBox:
        return OccupyBox(self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Edge(Atom):
    source: str
    target: str


@dataclass(frozen=True)
class Transition(Atom):
    source: str
    event: str
    target: str


@dataclass(frozen=True)
class Quantity(Atom):
    kind: str
    value: Decimal
    unit: str

    def __post_init__(self) -> None:
        if not isinstance(self.value, Decimal):
            try:
                object.__setattr__(self, "value", Decimal(str(self.value)))
            except InvalidOperation as exc:
                raise ValueError(f"not a decimal value: {self.value!r}") from exc


TimeGuard = TimePoint | TimeInterval
GeometryAtom = OccupyPoint | OccupyBox | Occupy3DBox
TopologyAtom = Edge | Transition

_GUARD_SLOTS = (TimePoint, TimeInterval, Owner, Event)
_BODY_SLOTS = (Quantity, OccupyPoint, OccupyBox, Occupy3DBox, Edge, Transition)


def normalize(inv: Invariant) -> Invariant:
    """Return the canonical form of ``inv``.

    Conjunction chains flatten into a single BIGAND, TRUE conjuncts drop,
    singleton conjunctions unwrap, the empty conjunction is TRUE, and an
    implication simplifies when either side is TRUE.  Idempotent.
    """
    if isinstance(inv, (And, BigAnd)):
        children = (inv.left, inv.right) if isinstance(inv, And) else inv.items
        items: list[Invariant] = []
        for child in children:
            c = normalize(child)
            if isinstance(c, BigAnd):
                items.extend(c.items)
            elif c == TRUE:
                continue
            else:
                items.append(c)
        if not items:
            return TRUE
        if len(items) == 1:
            return items[0]
        return BigAnd(tuple(items))
    if isinstance(inv, Implies):
        guard = normalize(inv.guard)
        body = normalize(inv.body)
        if guard == TRUE:
            return body
        if body == TRUE:
            return TRUE
        return Implies(guard, body)
    if isinstance(inv, Not):
        return Not(normalize(inv.inner))
    if isinstance(inv, Or):
        return Or(normalize(inv.left), normalize(inv.right))
    return inv


def decompose_box_to_points(box: OccupyBox, cap: int = DEFAULT_POINT_CAP) -> list[OccupyPoint]:
    """Expand a box into its cells, row-major (y outer, x inner, ascending)."""
    count = box.cell_count
    if count > cap:
        raise CapExceeded(count, cap)
    return [
        OccupyPoint(x, y)
        for y in range(box.y1, box.y2 + 1)
        for x in range(box.x1, box.x2 + 1)
    ]


@dataclass(frozen=True)
class Clause:
    """One guarded conjunct of a monitoring model.

    Guard slots hold at most one atom each; body atoms keep a fixed order of
    quantities, then geometry, then topology.
    """

    time_guard: TimeGuard | None = None
    owner: Owner | None = None
    event: Event | None = None
    quantities: tuple[Quantity, ...] = ()
    geometry: tuple[GeometryAtom, ...] = ()
    topology: tuple[TopologyAtom, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "quantities", tuple(self.quantities))
        object.__setattr__(self, "geometry", tuple(self.geometry))
        object.__setattr__(self, "topology", tuple(self.topology))

    @property
    def owner_tag(self) -> str:
        return self.owner.tag if self.owner is not None else ""

    def guard_atoms(self) -> tuple[Atom, ...]:
        atoms: list[Atom] = []
        if self.time_guard is not None:
            atoms.append(self.time_guard)
        if self.owner is not None:
            atoms.append(self.owner)
        if self.event is not None:
            atoms.append(self.event)
        return tuple(atoms)

    def body_atoms(self) -> tuple[Atom, ...]:
        return self.quantities + self.geometry + self.topology

    def holds_at(self, t: Tick) -> bool:
        """Whether the time guard admits tick ``t`` (guardless admits all)."""
        g = self.time_guard
        if g is None:
            return True
        if isinstance(g, TimePoint):
            return g.t == t
        return g.t1 <= t <= g.t2

    def time_span(self) -> tuple[Tick, Tick]:
        g = self.time_guard
        if g is None:
            return (TICK_MIN, TICK_MAX)
        if isinstance(g, TimePoint):
            return (g.t, g.t)
        return (g.t1, g.t2)

    def to_invariant(self) -> Invariant:
        guard = _conjoin(self.guard_atoms())
        body = _conjoin(self.body_atoms())
        if body is None:
            return guard if guard is not None else TRUE
        if guard is None:
            return body
        return Implies(guard, body)


def _conjoin(atoms: tuple[Atom, ...]) -> Invariant | None:
    if not atoms:
        return None
    if len(atoms) == 1:
        return atoms[0]
    return BigAnd(tuple(atoms))


def _flatten_conjunct_atoms(inv: Invariant, path: str) -> list[Atom]:
    if isinstance(inv, BigAnd):
        atoms: list[Atom] = []
        for i, item in enumerate(inv.items):
            if not isinstance(item, Atom):
                raise UnsupportedFragment(f"{path}.items[{i}]", "non-atom inside conjunction")
            atoms.append(item)
        return atoms
    if isinstance(inv, Atom):
        return [inv]
    raise UnsupportedFragment(path, f"{type(inv).__name__} where a conjunction of atoms is required")


def _clause_from_atoms(
    guard_atoms: list[Atom], body_atoms: list[Atom], path: str
) -> Clause:
    time_guard: TimeGuard | None = None
    owner: Owner | None = None
    event: Event | None = None
    for atom in guard_atoms:
        if isinstance(atom, (TimePoint, TimeInterval)):
            if time_guard is not None:
                raise UnsupportedFragment(path, "more than one time guard")
            time_guard = atom
        elif isinstance(atom, Owner):
            if owner is not None:
                raise UnsupportedFragment(path, "more than one owner guard")
            owner = atom
        elif isinstance(atom, Event):
            if event is not None:
                raise UnsupportedFragment(path, "more than one event guard")
            event = atom
        else:
            raise UnsupportedFragment(
                path, f"{type(atom).__name__} cannot appear in a guard"
            )
    quantities: list[Quantity] = []
    geometry: list[GeometryAtom] = []
    topology: list[TopologyAtom] = []
    for atom in body_atoms:
        if isinstance(atom, Quantity):
            quantities.append(atom)
        elif isinstance(atom, (OccupyPoint, OccupyBox, Occupy3DBox)):
            geometry.append(atom)
        elif isinstance(atom, (Edge, Transition)):
            topology.append(atom)
        else:
            raise UnsupportedFragment(
                path, f"{type(atom).__name__} cannot appear in a clause body"
            )
    return Clause(time_guard, owner, event, tuple(quantities), tuple(geometry), tuple(topology))


def _parse_clause(item: Invariant, path: str) -> Clause:
    if isinstance(item, Implies):
        guard_atoms = _flatten_conjunct_atoms(item.guard, f"{path}.guard")
        body_atoms = _flatten_conjunct_atoms(item.body, f"{path}.body")
        return _clause_from_atoms(guard_atoms, body_atoms, path)
    if isinstance(item, Falsity):
        raise UnsupportedFragment(path, "FALSE has no clause form")
    if isinstance(item, (TimePoint, TimeInterval, Owner, Event)):
        return _clause_from_atoms([item], [], path)
    if isinstance(item, Atom):
        return _clause_from_atoms([], [item], path)
    raise UnsupportedFragment(path, f"{type(item).__name__} outside the monitoring fragment")


def to_clauses(inv: Invariant, path: str = "root") -> list[Clause]:
    """Decompose a monitoring-fragment formula into its clause list.

    Raises UnsupportedFragment, with the offending position, for OR, NOT,
    FALSE, or nesting the fragment does not admit.
    """
    n = normalize(inv)
    if n == TRUE:
        return []
    if isinstance(n, BigAnd):
        return [_parse_clause(item, f"{path}.items[{i}]") for i, item in enumerate(n.items)]
    return [_parse_clause(n, path)]


def clauses_to_invariant(clauses: list[Clause]) -> Invariant:
    """Rebuild the canonical conjunction of ``clauses`` (TRUE when empty)."""
    parts = [c.to_invariant() for c in clauses]
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return BigAnd(tuple(parts))
