"""Longer-horizon decision support: weak-link heatmaps and renewable
installation estimates.

A heatmap aggregates each clause's load/generation quantities over a region
and time window; a cell's raw value is its worst (largest) deficit across
the window and scores normalize raw against the positive maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .invariants import (
    Clause,
    Invariant,
    Occupy3DBox,
    OccupyBox,
    OccupyPoint,
    Tick,
    to_clauses,
)
from .reasoning import TimeWindow

LOAD_KIND = "load_kw"
GENERATION_KIND = "generation_kw"
AGGREGATORS = ("max", "mean")


@dataclass(frozen=True)
class HeatMap:
    region: OccupyBox
    cell_size: int
    width: int
    height: int
    raw: tuple[float, ...]
    scores: tuple[float, ...]
    missing_quantities: bool = False

    def index(self, hx: int, hy: int) -> int:
        return hy * self.width + hx


def _grid_dims(region: OccupyBox, cell_size: int) -> tuple[int, int]:
    width = math.ceil(region.width / cell_size)
    height = math.ceil(region.height / cell_size)
    return width, height


def _footprint_cells(clause: Clause) -> set[tuple[int, int]]:
    """Every model cell the clause's geometry covers (union across atoms)."""
    cells: set[tuple[int, int]] = set()
    for g in clause.geometry:
        if isinstance(g, OccupyPoint):
            cells.add((g.x, g.y))
        elif isinstance(g, OccupyBox):
            for y in range(g.y1, g.y2 + 1):
                for x in range(g.x1, g.x2 + 1):
                    cells.add((x, y))
        elif isinstance(g, Occupy3DBox):
            fp = g.footprint
            for y in range(fp.y1, fp.y2 + 1):
                for x in range(fp.x1, fp.x2 + 1):
                    cells.add((x, y))
    return cells


def _clause_net_kw(clause: Clause) -> tuple[float, bool]:
    """Load minus generation asserted by one clause, in kW, and whether the
    clause carries either kind at all."""
    net = 0.0
    seen = False
    for q in clause.quantities:
        if q.kind == LOAD_KIND:
            net += float(q.value)
            seen = True
        elif q.kind == GENERATION_KIND:
            net -= float(q.value)
            seen = True
    return net, seen


def weak_link_heatmap(
    model: Invariant,
    region: OccupyBox,
    window: TimeWindow,
    cell_size: int,
    aggregate: str = "max",
) -> HeatMap:
    """Deficit map over ``region`` at ``cell_size`` granularity.

    Each clause's net kW splits evenly across its full geometric footprint;
    per tick the in-region shares sum per heat cell, and cells keep their
    worst tick (or the window mean).  A region with no quantity clauses
    comes back flagged with an all-zero map.
    """
    if cell_size <= 0:
        raise DomainError(f"cell size must be positive, got {cell_size}")
    if aggregate not in AGGREGATORS:
        raise DomainError(f"aggregate must be one of {AGGREGATORS}")
    width, height = _grid_dims(region, cell_size)
    size = width * height

    relevant: list[tuple[Clause, dict[int, float]]] = []
    for clause in to_clauses(model):
        net, has_energy_kinds = _clause_net_kw(clause)
        if not has_energy_kinds:
            continue
        footprint = _footprint_cells(clause)
        if not footprint:
            continue
        share = net / len(footprint)
        per_heat_cell: dict[int, float] = {}
        for (x, y) in footprint:
            if not region.contains(x, y):
                continue
            hx = (x - region.x1) // cell_size
            hy = (y - region.y1) // cell_size
            idx = hy * width + hx
            per_heat_cell[idx] = per_heat_cell.get(idx, 0.0) + share
        if per_heat_cell:
            relevant.append((clause, per_heat_cell))

    if not relevant:
        zeros = (0.0,) * size
        return HeatMap(region, cell_size, width, height, zeros, zeros, True)

    ticks = list(window.ticks())
    best = [-math.inf] * size
    mean_acc = [0.0] * size
    for t in ticks:
        tick_sum = [0.0] * size
        for clause, per_heat_cell in relevant:
            if not clause.holds_at(t):
                continue
            for idx, share in per_heat_cell.items():
                tick_sum[idx] += share
        for idx in range(size):
            if tick_sum[idx] > best[idx]:
                best[idx] = tick_sum[idx]
            mean_acc[idx] += tick_sum[idx]

    if aggregate == "max":
        raw = [0.0 if v == -math.inf else v for v in best]
    else:
        raw = [v / len(ticks) for v in mean_acc]

    max_raw = max(raw)
    if max_raw <= 0:
        scores = [0.0] * size
    else:
        scores = [min(max(v / max_raw, 0.0), 1.0) for v in raw]
    return HeatMap(region, cell_size, width, height, tuple(raw), tuple(scores), False)


def heatmap_to_json_obj(hm: HeatMap) -> dict:
    return {
        "region": {"x1": hm.region.x1, "y1": hm.region.y1, "x2": hm.region.x2, "y2": hm.region.y2},
        "cell_size": hm.cell_size,
        "width": hm.width,
        "height": hm.height,
        "raw": list(hm.raw),
        "scores": list(hm.scores),
        "missing_quantities": hm.missing_quantities,
    }


def heatmap_to_pgm(hm: HeatMap) -> str:
    """Plain-text grayscale PGM (P2), top row first, scores scaled to 0..255."""
    lines = ["P2", f"{hm.width} {hm.height}", "255"]
    for hy in range(hm.height - 1, -1, -1):
        row = [str(round(hm.scores[hy * hm.width + hx] * 255)) for hx in range(hm.width)]
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RenewableEstimate:
    annual_kwh: float
    annual_net: float
    roi: float
    pbp_years: float

    @property
    def pbp_infinite(self) -> bool:
        return math.isinf(self.pbp_years)

    def to_json_obj(self) -> dict:
        return {
            "annual_kwh": self.annual_kwh,
            "annual_net": self.annual_net,
            "roi": self.roi,
            "pbp_years": None if self.pbp_infinite else self.pbp_years,
            "pbp_infinite": self.pbp_infinite,
        }


def estimate_renewable(
    panel_area_m2: float,
    irradiance_kwh_m2_yr: float,
    efficiency: float,
    performance_ratio: float,
    capex: float,
    tariff_per_kwh: float,
    opex_per_year: float,
    lifetime_years: float,
) -> RenewableEstimate:
    """Undiscounted annual-yield, payback and return estimates.

    annualKwh = area x irradiance x efficiency x performance ratio;
    annualNet = annualKwh x tariff - opex; payback = capex / annualNet
    (infinite when annualNet <= 0); roi = (annualNet x lifetime - capex) / capex.
    """
    inputs = {
        "panel_area_m2": panel_area_m2,
        "irradiance_kwh_m2_yr": irradiance_kwh_m2_yr,
        "efficiency": efficiency,
        "performance_ratio": performance_ratio,
        "capex": capex,
        "tariff_per_kwh": tariff_per_kwh,
        "opex_per_year": opex_per_year,
        "lifetime_years": lifetime_years,
    }
    for name, value in inputs.items():
        if not isinstance(value, (int, float)) or value <= 0:
            raise DomainError(f"{name} must be positive, got {value!r}")
    for name in ("efficiency", "performance_ratio"):
        if inputs[name] > 1:
            raise DomainError(f"{name} must be in (0, 1], got {inputs[name]}")

    annual_kwh = panel_area_m2 * irradiance_kwh_m2_yr * efficiency * performance_ratio
    annual_net = annual_kwh * tariff_per_kwh - opex_per_year
    pbp_years = capex / annual_net if annual_net > 0 else math.inf
    roi = (annual_net * lifetime_years - capex) / capex
    return RenewableEstimate(annual_kwh, annual_net, roi, pbp_years)
