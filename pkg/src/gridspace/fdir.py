"""Fault detection, isolation and restoration over a distribution network.

The network is an undirected graph of typed nodes (sources, switches, loads)
with capacity-rated edges.  All operations are pure over immutable topology
values; the scenario runner threads state through them and keeps the
interruption log for reliability indices.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

from .errors import (
    DuplicateId,
    InvalidPath,
    NegativeDuration,
    NoIsolatingSwitches,
    ParseError,
    RestoreSafetyViolation,
    TopologyNotRadial,
    UnknownEdge,
    UnknownLoad,
)

SWITCH_KINDS = ("sectionalizer", "recloser", "tie-recloser")
SWITCH_STATES = ("open", "closed")


@dataclass(frozen=True)
class SourceNode:
    id: str
    capacity_kw: float

    def __post_init__(self) -> None:
        if self.capacity_kw < 0:
            raise ValueError(f"source {self.id}: capacity must be >= 0")


@dataclass(frozen=True)
class SwitchNode:
    id: str
    state: str
    kind: str

    def __post_init__(self) -> None:
        if self.state not in SWITCH_STATES:
            raise ValueError(f"switch {self.id}: bad state {self.state!r}")
        if self.kind not in SWITCH_KINDS:
            raise ValueError(f"switch {self.id}: bad kind {self.kind!r}")


@dataclass(frozen=True)
class LoadNode:
    id: str
    demand_kw: float
    customers: int

    def __post_init__(self) -> None:
        if self.demand_kw < 0:
            raise ValueError(f"load {self.id}: demand must be >= 0")
        if self.customers < 0:
            raise ValueError(f"load {self.id}: customers must be >= 0")


Node = SourceNode | SwitchNode | LoadNode


@dataclass(frozen=True)
class GridEdge:
    id: str
    a: str
    b: str
    capacity_kw: float

    def __post_init__(self) -> None:
        if self.capacity_kw < 0:
            raise ValueError(f"edge {self.id}: capacity must be >= 0")

    def other(self, node_id: str) -> str:
        return self.b if node_id == self.a else self.a


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    edges: tuple[GridEdge, ...]
    faults: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "faults", frozenset(self.faults))
        ids: set[str] = set()
        for n in self.nodes:
            if n.id in ids:
                raise DuplicateId(n.id)
            ids.add(n.id)
        edge_ids: set[str] = set()
        for e in self.edges:
            if e.id in edge_ids:
                raise DuplicateId(e.id)
            edge_ids.add(e.id)
            if e.a not in ids or e.b not in ids:
                raise ValueError(f"edge {e.id}: endpoint missing from node set")
        for f in self.faults:
            if f not in edge_ids:
                raise UnknownEdge(f)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def edge(self, edge_id: str) -> GridEdge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise UnknownEdge(edge_id)

    def sources(self) -> list[SourceNode]:
        return [n for n in self.nodes if isinstance(n, SourceNode)]

    def loads(self) -> list[LoadNode]:
        return [n for n in self.nodes if isinstance(n, LoadNode)]

    def switches(self) -> list[SwitchNode]:
        return [n for n in self.nodes if isinstance(n, SwitchNode)]

    def switch_states(self) -> dict[str, str]:
        return {s.id: s.state for s in self.switches()}


def _node_map(topo: Topology) -> dict[str, Node]:
    return {n.id: n for n in topo.nodes}


def _adjacency(topo: Topology) -> dict[str, list[GridEdge]]:
    adj: dict[str, list[GridEdge]] = {n.id: [] for n in topo.nodes}
    for e in topo.edges:
        adj[e.a].append(e)
        adj[e.b].append(e)
    for nid, edges in adj.items():
        edges.sort(key=lambda e, n=nid: (e.other(n), e.id))
    return adj


def set_switch(topo: Topology, switch_id: str, state: str) -> Topology:
    nodes = tuple(
        replace(n, state=state) if isinstance(n, SwitchNode) and n.id == switch_id else n
        for n in topo.nodes
    )
    return replace(topo, nodes=nodes)


def mark_fault(topo: Topology, edge_id: str) -> Topology:
    topo.edge(edge_id)
    return replace(topo, faults=topo.faults | {edge_id})


def clear_fault(topo: Topology, edge_id: str) -> Topology:
    topo.edge(edge_id)
    return replace(topo, faults=topo.faults - {edge_id})


def update_loads(topo: Topology, readings: Mapping[str, float]) -> Topology:
    """Replace load demands with fresh readings; other nodes untouched."""
    nodes_by_id = _node_map(topo)
    for load_id in readings:
        node = nodes_by_id.get(load_id)
        if not isinstance(node, LoadNode):
            raise UnknownLoad(load_id)
    nodes = tuple(
        replace(n, demand_kw=float(readings[n.id]))
        if isinstance(n, LoadNode) and n.id in readings
        else n
        for n in topo.nodes
    )
    return replace(topo, nodes=nodes)


def energized_nodes(topo: Topology) -> set[str]:
    """Nodes fed by some source through closed switches and healthy edges.

    Open switches block and are not themselves counted energized.
    """
    nodes_by_id = _node_map(topo)
    adj = _adjacency(topo)
    seen: set[str] = set()
    stack = [s.id for s in topo.sources()]
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        node = nodes_by_id[nid]
        if isinstance(node, SwitchNode) and node.state == "open":
            continue
        seen.add(nid)
        for e in adj[nid]:
            if e.id in topo.faults:
                continue
            other = e.other(nid)
            if other not in seen:
                stack.append(other)
    return seen


def isolate_fault(topo: Topology, edge_id: str) -> tuple[Topology, frozenset[str]]:
    """Mark the edge faulted and open the nearest switches around it.

    The fault zone is everything conductively attached to the faulted edge
    without crossing a switch; the opened set is the zone's closed boundary
    switches.  A source inside the zone cannot be cut off.
    """
    edge = topo.edge(edge_id)
    nodes_by_id = _node_map(topo)
    adj = _adjacency(topo)
    zone: set[str] = set()
    boundary: set[str] = set()
    stack = [edge.a, edge.b]
    while stack:
        nid = stack.pop()
        if nid in zone or nid in boundary:
            continue
        node = nodes_by_id[nid]
        if isinstance(node, SwitchNode):
            boundary.add(nid)
            continue
        if isinstance(node, SourceNode):
            raise NoIsolatingSwitches(
                f"source {nid} sits in the fault zone of edge {edge_id}"
            )
        zone.add(nid)
        for e in adj[nid]:
            stack.append(e.other(nid))
    opened = frozenset(s for s in boundary if nodes_by_id[s].state == "closed")
    out = mark_fault(topo, edge_id)
    for s in opened:
        out = set_switch(out, s, "open")
    return out, opened


def find_restoration_paths(topo: Topology) -> list[tuple[tuple[str, ...], str]]:
    """All simple source-to-open-tie-recloser paths that could pick up dark load.

    Paths run through closed switches and healthy edges; the tie must sit
    next to a de-energized node off the path.  Lexicographic path order.
    """
    nodes_by_id = _node_map(topo)
    adj = _adjacency(topo)
    energized = energized_nodes(topo)
    results: list[tuple[tuple[str, ...], str]] = []

    def tie_qualifies(tie_id: str, came_from: str) -> bool:
        for e in adj[tie_id]:
            if e.id in topo.faults:
                continue
            other = e.other(tie_id)
            if other == came_from or other in energized:
                continue
            node = nodes_by_id[other]
            if isinstance(node, SwitchNode) and node.state == "open":
                continue
            return True
        return False

    def walk(nid: str, path: list[str], visited: set[str]) -> None:
        for e in adj[nid]:
            if e.id in topo.faults:
                continue
            other = e.other(nid)
            if other in visited:
                continue
            node = nodes_by_id[other]
            if isinstance(node, SwitchNode) and node.state == "open":
                if node.kind == "tie-recloser" and tie_qualifies(other, nid):
                    results.append((tuple(path + [other]), other))
                continue
            walk(other, path + [other], visited | {other})

    for source in sorted(topo.sources(), key=lambda s: s.id):
        walk(source.id, [source.id], {source.id})
    results.sort(key=lambda item: item[0])
    return results


def _served_demand(topo: Topology, source_id: str) -> float:
    """Demand currently fed from one source (radial domains are disjoint)."""
    nodes_by_id = _node_map(topo)
    adj = _adjacency(topo)
    seen: set[str] = set()
    stack = [source_id]
    total = 0.0
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        node = nodes_by_id[nid]
        if isinstance(node, SwitchNode) and node.state == "open":
            continue
        seen.add(nid)
        if isinstance(node, LoadNode):
            total += node.demand_kw
        for e in adj[nid]:
            if e.id not in topo.faults:
                stack.append(e.other(nid))
    return total


def expected_load(topo: Topology, path: tuple[str, ...] | list[str]) -> float:
    """kW the path's source would carry after closing the path's tie."""
    path = tuple(path)
    if len(path) < 2:
        raise InvalidPath("path needs at least a source and a tie")
    if len(set(path)) != len(path):
        raise InvalidPath("path repeats a node")
    nodes_by_id = _node_map(topo)
    for nid in path:
        if nid not in nodes_by_id:
            raise InvalidPath(f"unknown node {nid!r}")
    first = nodes_by_id[path[0]]
    last = nodes_by_id[path[-1]]
    if not isinstance(first, SourceNode):
        raise InvalidPath(f"path must start at a source, starts at {path[0]!r}")
    if not (isinstance(last, SwitchNode) and last.kind == "tie-recloser" and last.state == "open"):
        raise InvalidPath(f"path must end at an open tie-recloser, ends at {path[-1]!r}")
    adj = _adjacency(topo)
    for a, b in zip(path, path[1:]):
        edge = next(
            (e for e in adj[a] if e.other(a) == b and e.id not in topo.faults), None
        )
        if edge is None:
            raise InvalidPath(f"no healthy edge between {a!r} and {b!r}")
    for nid in path[1:-1]:
        node = nodes_by_id[nid]
        if isinstance(node, SwitchNode) and node.state == "open":
            raise InvalidPath(f"open switch {nid!r} mid-path")

    existing = _served_demand(topo, path[0])
    before = energized_nodes(topo)
    after = energized_nodes(set_switch(topo, path[-1], "closed"))
    pickup = sum(
        node.demand_kw
        for nid in after - before
        if isinstance((node := nodes_by_id[nid]), LoadNode)
    )
    return existing + pickup


@dataclass(frozen=True)
class OpenSwitch:
    switch_id: str


@dataclass(frozen=True)
class CloseSwitch:
    switch_id: str


@dataclass(frozen=True)
class RelaySetting:
    switch_id: str
    expected_load_kw: float


Action = OpenSwitch | CloseSwitch | RelaySetting


@dataclass(frozen=True)
class ReconfigPlan:
    actions: tuple[Action, ...] = ()
    picked_up_loads: frozenset[str] = frozenset()
    infeasible_loads: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "picked_up_loads", frozenset(self.picked_up_loads))
        object.__setattr__(self, "infeasible_loads", frozenset(self.infeasible_loads))
        armed: set[str] = set()
        for action in self.actions:
            if isinstance(action, RelaySetting):
                armed.add(action.switch_id)
            elif isinstance(action, CloseSwitch) and action.switch_id not in armed:
                raise ValueError(
                    f"close of {action.switch_id!r} lacks a preceding relay setting"
                )


def edge_flows(topo: Topology) -> dict[str, float]:
    """Per-edge carried kW under the radial model (sum of downstream demand).

    Raises TopologyNotRadial when the energized network has a loop or a node
    fed by two sources.
    """
    nodes_by_id = _node_map(topo)
    adj = _adjacency(topo)
    flows: dict[str, float] = {}
    owned: dict[str, str] = {}
    for source in sorted(topo.sources(), key=lambda s: s.id):
        parent_edge: dict[str, GridEdge | None] = {source.id: None}
        order: list[str] = []
        stack = [source.id]
        while stack:
            nid = stack.pop()
            if owned.get(nid) not in (None, source.id):
                raise TopologyNotRadial(f"node {nid} fed by {owned[nid]} and {source.id}")
            owned[nid] = source.id
            order.append(nid)
            for e in adj[nid]:
                if e.id in topo.faults:
                    continue
                other = e.other(nid)
                other_node = nodes_by_id[other]
                if isinstance(other_node, SwitchNode) and other_node.state == "open":
                    continue
                pe = parent_edge.get(nid)
                if pe is not None and e.id == pe.id:
                    continue
                if other in parent_edge:
                    raise TopologyNotRadial(f"loop through edge {e.id}")
                parent_edge[other] = e
                stack.append(other)
        below: dict[str, float] = {}
        for nid in reversed(order):
            node = nodes_by_id[nid]
            demand = node.demand_kw if isinstance(node, LoadNode) else 0.0
            below[nid] = demand + sum(
                below[child]
                for child, pe in parent_edge.items()
                if pe is not None and pe.other(child) == nid
            )
        for child, pe in parent_edge.items():
            if pe is not None:
                flows[pe.id] = below[child]
    return flows


def capacity_violations(topo: Topology) -> list[str]:
    """Edges over their rating or sources over capacity, as descriptions."""
    out: list[str] = []
    flows = edge_flows(topo)
    edges_by_id = {e.id: e for e in topo.edges}
    for edge_id in sorted(flows):
        flow = flows[edge_id]
        cap = edges_by_id[edge_id].capacity_kw
        if flow > cap:
            out.append(f"edge {edge_id} carries {flow:g} kW over its {cap:g} kW rating")
    for source in sorted(topo.sources(), key=lambda s: s.id):
        served = _served_demand(topo, source.id)
        if served > source.capacity_kw:
            out.append(
                f"source {source.id} serves {served:g} kW over its {source.capacity_kw:g} kW capacity"
            )
    return out


def _dark_components(topo: Topology, energized: set[str]) -> list[set[str]]:
    """Connected de-energized segments (open switches are not members)."""
    adj = _adjacency(topo)
    dark = {
        n.id
        for n in topo.nodes
        if n.id not in energized
        and not (isinstance(n, SwitchNode) and n.state == "open")
    }
    comps: list[set[str]] = []
    unvisited = set(dark)
    while unvisited:
        start = min(unvisited)
        comp = set()
        stack = [start]
        while stack:
            nid = stack.pop()
            if nid not in unvisited:
                continue
            unvisited.discard(nid)
            comp.add(nid)
            for e in adj[nid]:
                if e.id in topo.faults:
                    continue
                other = e.other(nid)
                if other in unvisited:
                    stack.append(other)
        comps.append(comp)
    return comps


def _path_capacity(topo: Topology, path: tuple[str, ...]) -> float:
    nodes_by_id = _node_map(topo)
    source = nodes_by_id[path[0]]
    assert isinstance(source, SourceNode)
    adj = _adjacency(topo)
    cap = source.capacity_kw
    for a, b in zip(path, path[1:]):
        edge = next(e for e in adj[a] if e.other(a) == b and e.id not in topo.faults)
        cap = min(cap, edge.capacity_kw)
    return cap


def apply_plan(topo: Topology, actions: Iterable[Action]) -> Topology:
    """Apply switch actions in order; relay settings change no state."""
    work = topo
    for action in actions:
        if isinstance(action, OpenSwitch):
            work = set_switch(work, action.switch_id, "open")
        elif isinstance(action, CloseSwitch):
            work = set_switch(work, action.switch_id, "closed")
    return work


def plan_reconfiguration(topo: Topology) -> ReconfigPlan:
    """Greedy restoration: per dark segment, arm and close the feasible tie
    with the smallest expected load.

    Feasibility: expected load within the path's source and edge capacities,
    and the whole post-close network free of capacity violations.  Segments
    touching a faulted edge, and segments with no feasible tie, end up in
    ``infeasible_loads``.
    """
    if not topo.faults:
        return ReconfigPlan()
    nodes_by_id = _node_map(topo)
    fault_endpoints: set[str] = set()
    for edge_id in topo.faults:
        edge = topo.edge(edge_id)
        fault_endpoints.update((edge.a, edge.b))

    work = topo
    actions: list[Action] = []
    picked: set[str] = set()
    infeasible: set[str] = set()
    energized = energized_nodes(work)
    for comp in sorted(_dark_components(work, energized), key=min):
        loads = {nid for nid in comp if isinstance(nodes_by_id[nid], LoadNode)}
        if not loads:
            continue
        if comp & fault_endpoints:
            infeasible |= loads
            continue
        candidates: list[tuple[float, str, tuple[str, ...]]] = []
        adj = _adjacency(work)
        for path, tie in find_restoration_paths(work):
            adjacent = any(
                e.id not in work.faults and e.other(tie) in comp for e in adj[tie]
            )
            if not adjacent:
                continue
            load_kw = expected_load(work, path)
            if load_kw > _path_capacity(work, path):
                continue
            trial = set_switch(work, tie, "closed")
            try:
                if capacity_violations(trial):
                    continue
            except TopologyNotRadial:
                continue
            candidates.append((load_kw, tie, path))
        if not candidates:
            infeasible |= loads
            continue
        load_kw, tie, _path = min(candidates, key=lambda c: (c[0], c[1]))
        actions.append(RelaySetting(tie, load_kw))
        actions.append(CloseSwitch(tie))
        work = set_switch(work, tie, "closed")
        picked |= loads
        energized = energized_nodes(work)
    return ReconfigPlan(tuple(actions), frozenset(picked), frozenset(infeasible))


def restore(topo: Topology, plan: ReconfigPlan) -> Topology:
    """Undo a plan: walk its actions backwards with each inverted.

    Closing back an isolation switch is checked first: it must not energize
    any still-marked fault and must not overload the network.
    """
    work = topo
    for action in reversed(plan.actions):
        if isinstance(action, RelaySetting):
            continue
        if isinstance(action, CloseSwitch):
            work = set_switch(work, action.switch_id, "open")
            continue
        trial = set_switch(work, action.switch_id, "closed")
        energized = energized_nodes(trial)
        for edge_id in sorted(trial.faults):
            edge = trial.edge(edge_id)
            if edge.a in energized or edge.b in energized:
                raise RestoreSafetyViolation(
                    action.switch_id, f"would energize faulted edge {edge_id}"
                )
        try:
            violations = capacity_violations(trial)
        except TopologyNotRadial as exc:
            raise RestoreSafetyViolation(action.switch_id, str(exc)) from exc
        if violations:
            raise RestoreSafetyViolation(action.switch_id, "; ".join(violations))
        work = trial
    return work


@dataclass(frozen=True)
class Interruption:
    load_id: str
    customers: int
    duration_minutes: float


@dataclass(frozen=True)
class ReliabilityReport:
    saidi_minutes: float
    caidi_minutes: float
    caidi_defined: bool
    interruptions: tuple[Interruption, ...]

    def to_json_obj(self) -> dict:
        return {
            "saidi_minutes": self.saidi_minutes,
            "caidi_minutes": self.caidi_minutes if self.caidi_defined else None,
            "caidi_defined": self.caidi_defined,
            "interruptions": [
                {
                    "load": i.load_id,
                    "customers": i.customers,
                    "duration_minutes": i.duration_minutes,
                }
                for i in self.interruptions
            ],
        }


def reliability_indices(
    topo: Topology, event_log: Iterable[tuple[str, int, int]]
) -> ReliabilityReport:
    """Customer-weighted interruption indices from (load, off, on) records.

    Ticks count as seconds; durations are reported in minutes.  SAIDI
    divides customer-minutes by all customers served, CAIDI by the customers
    actually interrupted (undefined when nobody was).
    """
    nodes_by_id = _node_map(topo)
    total_customers = sum(l.customers for l in topo.loads())
    interruptions: list[Interruption] = []
    customer_minutes = 0.0
    interrupted_customers = 0
    for load_id, t_off, t_on in event_log:
        node = nodes_by_id.get(load_id)
        if not isinstance(node, LoadNode):
            raise UnknownLoad(load_id)
        if t_on < t_off:
            raise NegativeDuration(f"load {load_id}: restored at {t_on} before {t_off}")
        minutes = (t_on - t_off) / 60.0
        interruptions.append(Interruption(load_id, node.customers, minutes))
        customer_minutes += node.customers * minutes
        interrupted_customers += node.customers
    saidi = customer_minutes / total_customers if total_customers else 0.0
    if interrupted_customers:
        return ReliabilityReport(
            saidi, customer_minutes / interrupted_customers, True, tuple(interruptions)
        )
    return ReliabilityReport(saidi, 0.0, False, tuple(interruptions))


def parse_topology(obj: object) -> Topology:
    """Build a topology from its JSON document form."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise ParseError(0, 0, "topology must be a JSON object")
    nodes: list[Node] = []
    for i, n in enumerate(obj.get("nodes", [])):
        if not isinstance(n, dict) or "id" not in n or "type" not in n:
            raise ParseError(0, 0, f"nodes[{i}]: needs id and type")
        kind = n["type"]
        try:
            if kind == "source":
                nodes.append(SourceNode(n["id"], float(n["capacity_kw"])))
            elif kind == "switch":
                nodes.append(SwitchNode(n["id"], n.get("state", "closed"), n.get("kind", "sectionalizer")))
            elif kind == "load":
                nodes.append(LoadNode(n["id"], float(n["demand_kw"]), int(n["customers"])))
            else:
                raise ParseError(0, 0, f"nodes[{i}]: unknown type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(0, 0, f"nodes[{i}]: {exc}") from exc
    edges: list[GridEdge] = []
    for i, e in enumerate(obj.get("edges", [])):
        if not isinstance(e, dict):
            raise ParseError(0, 0, f"edges[{i}]: must be an object")
        try:
            edges.append(GridEdge(e["id"], e["a"], e["b"], float(e["capacity_kw"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(0, 0, f"edges[{i}]: {exc}") from exc
    faults = obj.get("faults", [])
    if not isinstance(faults, list):
        raise ParseError(0, 0, "faults must be an array of edge ids")
    try:
        return Topology(tuple(nodes), tuple(edges), frozenset(faults))
    except (DuplicateId, UnknownEdge, ValueError) as exc:
        raise ParseError(0, 0, str(exc)) from exc


def topology_to_json_obj(topo: Topology) -> dict:
    nodes: list[dict] = []
    for n in topo.nodes:
        if isinstance(n, SourceNode):
            nodes.append({"id": n.id, "type": "source", "capacity_kw": n.capacity_kw})
        elif isinstance(n, SwitchNode):
            nodes.append({"id": n.id, "type": "switch", "state": n.state, "kind": n.kind})
        else:
            nodes.append(
                {"id": n.id, "type": "load", "demand_kw": n.demand_kw, "customers": n.customers}
            )
    return {
        "nodes": nodes,
        "edges": [
            {"id": e.id, "a": e.a, "b": e.b, "capacity_kw": e.capacity_kw} for e in topo.edges
        ],
        "faults": sorted(topo.faults),
    }


def parse_topology_csv(text: str) -> Topology:
    """Adjacency-matrix import.

    Row 1: empty corner then node ids.  Row 2: "types" then one token per
    node: source:<capacity>, switch:<state>:<kind>, or
    load:<demand>:<customers>.  Remaining rows: node id then edge capacities
    (blank = no edge); the matrix must be symmetric.  Edge ids are
    "<a>--<b>" with endpoints in row order.
    """
    rows = [row for row in csv.reader(io.StringIO(text)) if any(c.strip() for c in row)]
    if len(rows) < 2:
        raise ParseError(1, 1, "matrix needs a header row and a types row")
    ids = [c.strip() for c in rows[0][1:]]
    if not ids or any(not i for i in ids):
        raise ParseError(1, 2, "header row must list node ids")
    if rows[1][0].strip() != "types":
        raise ParseError(2, 1, "second row must start with 'types'")
    tokens = [c.strip() for c in rows[1][1:]]
    if len(tokens) != len(ids):
        raise ParseError(2, 1, f"{len(ids)} nodes but {len(tokens)} type tokens")
    nodes: list[Node] = []
    for i, (nid, token) in enumerate(zip(ids, tokens)):
        parts = token.split(":")
        try:
            if parts[0] == "source" and len(parts) == 2:
                nodes.append(SourceNode(nid, float(parts[1])))
            elif parts[0] == "switch" and len(parts) == 3:
                nodes.append(SwitchNode(nid, parts[1], parts[2]))
            elif parts[0] == "load" and len(parts) == 3:
                nodes.append(LoadNode(nid, float(parts[1]), int(parts[2])))
            else:
                raise ParseError(2, i + 2, f"bad type token {token!r}")
        except ValueError as exc:
            raise ParseError(2, i + 2, f"bad type token {token!r}: {exc}") from exc
    matrix_rows = rows[2:]
    if len(matrix_rows) != len(ids):
        raise ParseError(3, 1, f"{len(ids)} nodes but {len(matrix_rows)} matrix rows")
    index = {nid: i for i, nid in enumerate(ids)}
    cells: dict[tuple[int, int], float] = {}
    for r, row in enumerate(matrix_rows):
        rid = row[0].strip()
        if rid not in index or index[rid] != r:
            raise ParseError(r + 3, 1, f"matrix rows must follow header order, got {rid!r}")
        values = row[1:]
        if len(values) != len(ids):
            raise ParseError(r + 3, 2, f"row {rid!r} needs {len(ids)} cells")
        for c, cell in enumerate(values):
            cell = cell.strip()
            if not cell:
                continue
            try:
                cells[(r, c)] = float(cell)
            except ValueError as exc:
                raise ParseError(r + 3, c + 2, f"bad capacity {cell!r}") from exc
    edges: list[GridEdge] = []
    for (r, c), cap in sorted(cells.items()):
        if r == c:
            raise ParseError(r + 3, c + 2, "self edges are not allowed")
        if r > c:
            if cells.get((c, r)) != cap:
                raise ParseError(r + 3, c + 2, f"matrix not symmetric at ({ids[r]},{ids[c]})")
            continue
        if (c, r) not in cells or cells[(c, r)] != cap:
            raise ParseError(r + 3, c + 2, f"matrix not symmetric at ({ids[r]},{ids[c]})")
        edges.append(GridEdge(f"{ids[r]}--{ids[c]}", ids[r], ids[c], cap))
    return Topology(tuple(nodes), tuple(edges))


def _action_to_obj(action: Action) -> dict:
    if isinstance(action, OpenSwitch):
        return {"action": "open", "switch": action.switch_id}
    if isinstance(action, CloseSwitch):
        return {"action": "close", "switch": action.switch_id}
    return {
        "action": "relay-setting",
        "switch": action.switch_id,
        "expected_load_kw": action.expected_load_kw,
    }


@dataclass(frozen=True)
class ScenarioStep:
    event: dict
    opened: tuple[str, ...]
    actions: tuple[Action, ...]
    infeasible: tuple[str, ...]
    dark_loads: tuple[str, ...]
    now: int

    def to_json_obj(self) -> dict:
        return {
            "event": self.event,
            "t": self.now,
            "opened": list(self.opened),
            "plan": [_action_to_obj(a) for a in self.actions],
            "infeasible": list(self.infeasible),
            "dark_loads": list(self.dark_loads),
        }


@dataclass(frozen=True)
class ScenarioResult:
    steps: tuple[ScenarioStep, ...]
    report: ReliabilityReport
    final: Topology


def run_scenario(topo: Topology, events: list[dict]) -> ScenarioResult:
    """Replay an ordered event list and account interruptions.

    Events: {"type": "updateLoads", "readings": {id: kW}} |
    {"type": "fault", "edge": id} | {"type": "clearFault", "edge": id} |
    {"type": "tick", "seconds": n}.  A fault is isolated and a
    reconfiguration planned and applied in the same step; clearing a fault
    restores by reversing that step's combined actions.  Interruptions still
    open when the scenario ends close at the final tick.
    """
    work = topo
    now = 0
    dark_since: dict[str, int] = {}
    pending: dict[str, ReconfigPlan] = {}
    log: list[tuple[str, int, int]] = []
    steps: list[ScenarioStep] = []

    def account() -> list[str]:
        energized = energized_nodes(work)
        dark = sorted(l.id for l in work.loads() if l.id not in energized)
        for lid in dark:
            dark_since.setdefault(lid, now)
        for lid in list(dark_since):
            if lid not in dark:
                log.append((lid, dark_since.pop(lid), now))
        return dark

    for event in events:
        if not isinstance(event, dict) or "type" not in event:
            raise ValueError(f"bad scenario event: {event!r}")
        kind = event["type"]
        opened: tuple[str, ...] = ()
        actions: tuple[Action, ...] = ()
        infeasible: tuple[str, ...] = ()
        if kind == "updateLoads":
            work = update_loads(work, event.get("readings", {}))
        elif kind == "fault":
            edge_id = event["edge"]
            work, opened_set = isolate_fault(work, edge_id)
            opened = tuple(sorted(opened_set))
            plan = plan_reconfiguration(work)
            work = apply_plan(work, plan.actions)
            combined = tuple(OpenSwitch(s) for s in opened) + plan.actions
            pending[edge_id] = ReconfigPlan(
                combined, plan.picked_up_loads, plan.infeasible_loads
            )
            actions = plan.actions
            infeasible = tuple(sorted(plan.infeasible_loads))
        elif kind == "clearFault":
            edge_id = event["edge"]
            work = clear_fault(work, edge_id)
            plan = pending.pop(edge_id, None)
            if plan is not None:
                work = restore(work, plan)
                actions = plan.actions
        elif kind == "tick":
            now += int(event["seconds"])
        else:
            raise ValueError(f"unknown scenario event type {kind!r}")
        dark = account()
        steps.append(ScenarioStep(event, opened, actions, infeasible, tuple(dark), now))

    for lid, since in sorted(dark_since.items()):
        log.append((lid, since, now))
    report = reliability_indices(work, log)
    return ScenarioResult(tuple(steps), report, work)
