"""Synthetic fleets at production scale and a seeded failure/repair timeline.

Randomness comes from numpy's PCG64 via named streams so determinism
survives refactors: stream 1 seeds fleet structure, stream 2 per-element
outage rates, stream 3 the incident timeline.  A scenario run is fully
determined by (fleet seed, history seed, config): the event timeline is
folded from the incident log itself, never drawn again.

The engine scores every tick, recalibrates thresholds on the datacenter and
region populations, and advances persistence budgets.  Hazards use a
trailing two-year incident window, so histories should include a pre-roll
before the scenario start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ._validation import check_fraction_pair, check_int_range, check_positive
from .calibration import BudgetConfig, Thresholds, calibrate_and_assign
from .errors import ConfigurationError, DomainError, SchemaError
from .fabric import (
    CapacityElement,
    Datacenter,
    ClosLayer,
    ElementKind,
    ElementState,
    FabricTopology,
    LayerTier,
    validate,
)
from .hazard import ConditionWeights, ElementHazard, IncidentRecord, loss_pmf_dense
from .scoring import (
    Color,
    PersistenceState,
    Scope,
    ScoreCard,
    ScoreSeries,
    SeriesPoint,
    dc_scope_id,
    effective_safety_margin,
    layer_scope_id,
)

SIM_EPOCH = datetime(2025, 1, 1, tzinfo=timezone.utc)
TRAILING_WINDOW_DAYS = 730.0
DAYS_PER_YEAR = 365.0

_STREAM_FLEET = 1
_STREAM_RATES = 2
_STREAM_EVENTS = 3

_TIERS = (LayerTier.TOR, LayerTier.AGG, LayerTier.SPINE)

_UP, _FAILED, _DRAINED = 0, 1, 2
_STATE_CODE = {ElementState.UP: _UP, ElementState.FAILED: _FAILED, ElementState.DRAINED: _DRAINED}


class SimEventKind(str, Enum):
    FAIL = "fail"
    REPAIR = "repair"
    MAINTENANCE_START = "maintenance_start"
    MAINTENANCE_END = "maintenance_end"


@dataclass(frozen=True)
class SimEvent:
    at: datetime
    kind: SimEventKind
    element_id: str


@dataclass(frozen=True)
class FleetGenSpec:
    seed: int = 42
    n_regions: int = 60
    n_datacenters: int = 400
    layers_per_dc: int = 3
    elements_per_layer: tuple[int, int] = (8, 32)
    element_capacity: tuple[int, int] = (40, 100)
    demand_fraction: tuple[float, float] = (0.55, 0.85)

    def __post_init__(self) -> None:
        if self.n_regions < 1 or self.n_datacenters < self.n_regions:
            raise ConfigurationError(
                f"need n_datacenters >= n_regions >= 1, got {self.n_datacenters}/{self.n_regions}"
            )
        if self.layers_per_dc < 1:
            raise ConfigurationError(f"layers_per_dc must be >= 1, got {self.layers_per_dc}")
        check_int_range(*self.elements_per_layer, "elements_per_layer")
        check_int_range(*self.element_capacity, "element_capacity")
        lo, hi = check_fraction_pair(*self.demand_fraction, "demand_fraction")
        if hi > 1.0:
            raise ConfigurationError(f"demand_fraction must stay within [0, 1], got {hi}")


@dataclass(frozen=True)
class ScenarioConfig:
    duration_days: int = 365
    tick_days: float = 1.0
    base_fail_rate_per_year: tuple[float, float] = (0.1, 1.0)
    mean_repair_days: float = 3.0
    budget: BudgetConfig = field(default_factory=BudgetConfig)

    def __post_init__(self) -> None:
        if self.duration_days < 1:
            raise ConfigurationError(f"duration_days must be >= 1, got {self.duration_days}")
        check_positive(self.tick_days, "tick_days")
        lo, hi = self.base_fail_rate_per_year
        if lo < 0 or hi < lo:
            raise ConfigurationError(
                f"base_fail_rate_per_year must satisfy 0 <= lo <= hi, got ({lo}, {hi})"
            )
        check_positive(self.mean_repair_days, "mean_repair_days")


def _id_width(n: int, minimum: int) -> int:
    return max(minimum, len(str(max(n - 1, 0))))


def generate_fleet(spec: FleetGenSpec) -> FabricTopology:
    """Deterministic synthetic fleet; datacenters round-robin across regions."""
    rng = np.random.default_rng([_STREAM_FLEET, spec.seed])
    rw = _id_width(spec.n_regions, 2)
    dw = _id_width(spec.n_datacenters, 3)
    regions = tuple(f"region-{i:0{rw}d}" for i in range(spec.n_regions))

    e_lo, e_hi = spec.elements_per_layer
    c_lo, c_hi = spec.element_capacity
    d_lo, d_hi = spec.demand_fraction

    datacenters = []
    for d in range(spec.n_datacenters):
        dc_id = f"dc-{d:0{dw}d}"
        layers = []
        tier_seen: dict[LayerTier, int] = {}
        for l in range(spec.layers_per_dc):
            tier = _TIERS[l % len(_TIERS)]
            repeat = tier_seen.get(tier, 0)
            tier_seen[tier] = repeat + 1
            layer_id = tier.value if repeat == 0 else f"{tier.value}-{repeat}"
            n_elem = int(rng.integers(e_lo, e_hi + 1))
            caps = rng.integers(c_lo, c_hi + 1, size=n_elem)
            kinds = rng.random(n_elem) < 0.5
            elements = tuple(
                CapacityElement(
                    id=f"{dc_id}/{layer_id}/e{e:03d}",
                    kind=ElementKind.LINK if kinds[e] else ElementKind.DEVICE,
                    capacity=int(caps[e]),
                )
                for e in range(n_elem)
            )
            installed = int(caps.sum())
            demand = int(math.floor(float(rng.uniform(d_lo, d_hi)) * installed))
            layers.append(
                ClosLayer(id=layer_id, tier=tier, elements=elements, demand_forecast=demand)
            )
        datacenters.append(
            Datacenter(id=dc_id, region_id=regions[d % spec.n_regions], layers=tuple(layers))
        )

    fleet = FabricTopology(regions=regions, datacenters=tuple(datacenters), created_at=SIM_EPOCH)
    violations = validate(fleet)
    if violations:  # structurally impossible for a correct generator
        raise ConfigurationError(f"generated fleet is invalid: {violations[0].message}")
    return fleet


def generate_history(
    fleet: FabricTopology,
    config: ScenarioConfig,
    seed: int,
    *,
    end: datetime = SIM_EPOCH,
) -> list[IncidentRecord]:
    """Seeded Poisson incident log over the ``config.duration_days`` ending at ``end``.

    Each element draws a constant rate from ``base_fail_rate_per_year``;
    incident counts are Poisson over the window, start times uniform, and
    durations exponential with ``mean_repair_days``.
    """
    rates_rng = np.random.default_rng([_STREAM_RATES, seed])
    events_rng = np.random.default_rng([_STREAM_EVENTS, seed])
    window_days = float(config.duration_days)
    start_at = end - timedelta(days=window_days)
    r_lo, r_hi = config.base_fail_rate_per_year

    records: list[IncidentRecord] = []
    for _, layer in fleet.iter_layers():
        for elem in layer.elements:
            rate = float(rates_rng.uniform(r_lo, r_hi))
            count = int(events_rng.poisson(rate * window_days / DAYS_PER_YEAR))
            if count == 0:
                continue
            offsets = np.sort(events_rng.uniform(0.0, window_days, size=count))
            durations = events_rng.exponential(config.mean_repair_days, size=count)
            for k in range(count):
                begin = start_at + timedelta(days=float(offsets[k]))
                records.append(
                    IncidentRecord(
                        element_id=elem.id,
                        start=begin,
                        end=begin + timedelta(days=float(durations[k])),
                        cause="synthetic",
                    )
                )
    records.sort(key=lambda r: (r.start, r.element_id))
    return records


def _merged_intervals(
    history: Iterable[IncidentRecord], epoch: datetime
) -> dict[str, list[tuple[float, float]]]:
    """Per-element outage intervals in days relative to ``epoch``, overlaps merged."""
    raw: dict[str, list[tuple[float, float]]] = {}
    for rec in history:
        s = (rec.start - epoch).total_seconds() / 86400.0
        e = (rec.end - epoch).total_seconds() / 86400.0
        raw.setdefault(rec.element_id, []).append((s, e))
    merged: dict[str, list[tuple[float, float]]] = {}
    for eid, spans in raw.items():
        spans.sort()
        out: list[tuple[float, float]] = []
        for s, e in spans:
            if out and s <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], e))
            else:
                out.append((s, e))
        merged[eid] = out
    return merged


def incident_events(
    history: Iterable[IncidentRecord], *, epoch: datetime = SIM_EPOCH
) -> list[SimEvent]:
    """Fail/repair timeline folded from an incident log (overlaps merged, so a
    repair always closes an unresolved failure)."""
    events: list[SimEvent] = []
    for eid, spans in _merged_intervals(history, epoch).items():
        for s, e in spans:
            events.append(SimEvent(at=epoch + timedelta(days=s), kind=SimEventKind.FAIL, element_id=eid))
            events.append(SimEvent(at=epoch + timedelta(days=e), kind=SimEventKind.REPAIR, element_id=eid))
    events.sort(key=lambda ev: (ev.at, ev.element_id, ev.kind is SimEventKind.REPAIR))
    return events


@dataclass(frozen=True)
class TickState:
    """Consistent snapshot of one scoring tick."""

    at: datetime
    cards: tuple[ScoreCard, ...]
    thresholds_dc: Thresholds
    thresholds_region: Thresholds


class ScenarioEngine:
    """Tick-driven scoring over a fleet and its incident timeline.

    Per tick: apply fail/repair events due, re-estimate hazards from the
    trailing incident window, score layers/datacenters/regions, recalibrate
    thresholds on both populations, then advance persistence budgets.
    """

    def __init__(
        self,
        fleet: FabricTopology,
        history: Sequence[IncidentRecord],
        config: ScenarioConfig,
        *,
        start: datetime = SIM_EPOCH,
        weights: ConditionWeights = ConditionWeights(),
    ) -> None:
        problems = validate(fleet)
        if problems:
            raise DomainError(f"fleet is invalid: {problems[0].message} at {problems[0].path}")
        self.fleet = fleet
        self.config = config
        self.weights = weights
        self.start = start
        self._budget = config.budget

        # --- element/layer/dc/region index (element order is fleet order) ---
        eids: list[str] = []
        caps: list[int] = []
        state: list[int] = []
        layer_of: list[int] = []
        self._layers: list[tuple[int, int]] = []  # (dc_index, layer_index_in_dc)
        self._layer_scope: list[str] = []
        self._layer_demand: list[int] = []
        self._layer_slice: list[tuple[int, int]] = []
        self._dc_scope: list[str] = []
        self._dc_region: list[int] = []
        region_index = {rid: i for i, rid in enumerate(fleet.regions)}

        for d, dc in enumerate(fleet.datacenters):
            self._dc_scope.append(dc_scope_id(dc))
            self._dc_region.append(region_index[dc.region_id])
            for l, layer in enumerate(dc.layers):
                li = len(self._layers)
                lo = len(eids)
                for elem in layer.elements:
                    eids.append(elem.id)
                    caps.append(elem.capacity)
                    state.append(_STATE_CODE[elem.state])
                    layer_of.append(li)
                self._layers.append((d, l))
                self._layer_scope.append(layer_scope_id(dc, layer))
                self._layer_demand.append(layer.demand_forecast)
                self._layer_slice.append((lo, len(eids)))
        self._layer_index_map = {pos: li for li, pos in enumerate(self._layers)}

        self._eids = eids
        self._eidx = {eid: i for i, eid in enumerate(eids)}
        self._caps = np.asarray(caps, dtype=np.int64)
        self._state = np.asarray(state, dtype=np.int8)
        self._layer_of = np.asarray(layer_of, dtype=np.int64)
        E = len(eids)
        L = len(self._layers)
        D = len(fleet.datacenters)
        R = len(fleet.regions)

        # layer order inside each dc / dc order inside each region, sorted by
        # scope id so argmax tie-breaks land on the lexicographically smaller id
        self._dc_layers: list[list[int]] = [[] for _ in range(D)]
        for li, (d, _) in enumerate(self._layers):
            self._dc_layers[d].append(li)
        for d in range(D):
            self._dc_layers[d].sort(key=lambda li: self._layer_scope[li])
        self._region_dcs: list[list[int]] = [[] for _ in range(R)]
        for d in range(D):
            self._region_dcs[self._dc_region[d]].append(d)
        for r in range(R):
            self._region_dcs[r].sort(key=lambda d: self._dc_scope[d])
        # regions without datacenters exist in files; they simply get no card
        self._scored_regions = [r for r in range(R) if self._region_dcs[r]]

        # --- incident timeline ---
        merged = _merged_intervals(history, start)
        starts: list[tuple[float, int]] = []
        events: list[tuple[float, int, int]] = []  # (day, kind 0=fail/1=repair, element)
        for eid, spans in merged.items():
            ei = self._eidx.get(eid)
            if ei is None:
                raise DomainError(f"incident history references unknown element {eid!r}")
            for s, e in spans:
                starts.append((s, ei))
                events.append((s, 0, ei))
                events.append((e, 1, ei))
        starts.sort()
        events.sort()
        self._start_days = np.asarray([s for s, _ in starts], dtype=np.float64)
        self._start_eidx = np.asarray([e for _, e in starts], dtype=np.int64)
        self._events = events
        self._event_ptr = 0

        # raw (unmerged) starts drive the hazard counts; merged intervals only
        # shape the up/down timeline
        raw_starts = sorted(
            ((rec.start - start).total_seconds() / 86400.0, self._eidx[rec.element_id])
            for rec in history
        )
        self._count_days = np.asarray([s for s, _ in raw_starts], dtype=np.float64)
        self._count_eidx = np.asarray([e for _, e in raw_starts], dtype=np.int64)

        self._latest_end = np.full(E, -np.inf, dtype=np.float64)
        self._prev_p = np.full(E, np.nan, dtype=np.float64)
        self._prev_state = np.full(E, -1, dtype=np.int8)

        self._lay_viol = np.zeros(L, dtype=np.float64)
        self._lay_es = np.zeros(L, dtype=np.float64)
        self._lay_raw = np.zeros(L, dtype=np.float64)
        self._lay_avail = np.zeros(L, dtype=np.int64)

        self._lay_days = np.zeros(L, dtype=np.float64)
        self._dc_days = np.zeros(D, dtype=np.float64)
        self._reg_days = np.zeros(R, dtype=np.float64)
        self._year = start.year

        self._tick = 0
        self._prev_day = -math.inf
        self._p = np.zeros(E, dtype=np.float64)
        self.current: TickState | None = None

    # ------------------------------------------------------------------
    @property
    def n_ticks(self) -> int:
        return int(math.ceil(self.config.duration_days / self.config.tick_days))

    def _apply_events_due(self, day: float) -> None:
        while self._event_ptr < len(self._events) and self._events[self._event_ptr][0] <= day:
            _, kind, ei = self._events[self._event_ptr]
            self._event_ptr += 1
            if self._state[ei] == _DRAINED:
                continue  # intentional removal persists through the timeline
            if kind == 0:
                self._state[ei] = _FAILED
            else:
                self._state[ei] = _UP
                self._latest_end[ei] = self._events[self._event_ptr - 1][0]

    def _hazard_probs(self, day: float) -> np.ndarray:
        lo = np.searchsorted(self._count_days, day - TRAILING_WINDOW_DAYS, side="right")
        hi = np.searchsorted(self._count_days, day, side="right")
        counts = np.bincount(self._count_eidx[lo:hi], minlength=len(self._eids))
        rates = np.maximum(counts / (TRAILING_WINDOW_DAYS / DAYS_PER_YEAR), self.weights.min_rate_per_year)
        maintained = self._latest_end >= day - self.weights.maintenance_window_days
        weight = np.where(maintained, self.weights.maintenance_multiplier, 1.0)
        return -np.expm1(-rates * weight * self._budget.horizon_years)

    def _rescore_layer(self, li: int) -> None:
        lo, hi = self._layer_slice[li]
        state = self._state[lo:hi]
        caps = self._caps[lo:hi]
        up = state == _UP
        avail = int(caps[up].sum())
        demand = self._layer_demand[li]
        es = effective_safety_margin(avail, demand)
        usable = up & (caps > 0)
        if usable.any():
            pmf = loss_pmf_dense(caps[usable], self._p[lo:hi][usable], self._budget.beta)
            headroom = avail - demand
            if headroom < 0:
                viol = 1.0
            elif headroom + 1 >= len(pmf):
                viol = 0.0
            else:
                viol = min(1.0, max(0.0, float(pmf[headroom + 1 :].sum())))
        else:
            viol = 1.0 if avail < demand else 0.0
        self._lay_avail[li] = avail
        self._lay_es[li] = es
        self._lay_viol[li] = viol
        self._lay_raw[li] = 1.0 if es < 0 else viol

    def advance(self) -> TickState:
        """Run one tick and return its consistent snapshot."""
        k = self._tick
        day = k * self.config.tick_days
        at = self.start + timedelta(days=day)
        if at.year != self._year:
            self._year = at.year
            self._lay_days[:] = 0.0
            self._dc_days[:] = 0.0
            self._reg_days[:] = 0.0

        self._apply_events_due(day)
        self._p = self._hazard_probs(day)

        changed = (self._p != self._prev_p) | (self._state != self._prev_state)
        for li in np.unique(self._layer_of[changed]):
            self._rescore_layer(int(li))
        self._prev_p = self._p
        self._prev_state = self._state.copy()

        budget = self._budget
        overage = np.maximum(0.0, self._lay_days / DAYS_PER_YEAR - budget.t_pers) / budget.t_pers
        lay_pers = np.minimum(1.0, self._lay_raw * (1.0 + budget.kappa * overage))

        # worst layer per dc / worst dc per region, ties to the smaller scope id
        D = len(self._dc_scope)
        R = len(self._region_dcs)
        dc_best = np.empty(D, dtype=np.int64)
        for d in range(D):
            idxs = self._dc_layers[d]
            best = idxs[0]
            for li in idxs[1:]:
                if lay_pers[li] > lay_pers[best]:
                    best = li
            dc_best[d] = best
        dc_pers = lay_pers[dc_best]
        reg_best_dc = np.full(R, -1, dtype=np.int64)
        for r in self._scored_regions:
            idxs = self._region_dcs[r]
            best = idxs[0]
            for d in idxs[1:]:
                if dc_pers[d] > dc_pers[best]:
                    best = d
            reg_best_dc[r] = best

        thresholds_dc, dc_colors = calibrate_and_assign(
            [(self._dc_scope[d], float(dc_pers[d])) for d in range(D)],
            budget, population=Scope.DATACENTER, at=at,
        )
        thresholds_region, reg_colors = calibrate_and_assign(
            [(self.fleet.regions[r], float(dc_pers[reg_best_dc[r]])) for r in self._scored_regions],
            budget, population=Scope.REGION, at=at,
        )

        triple = (thresholds_dc.t_red, thresholds_dc.t_orange, thresholds_dc.t_amber)
        lay_color_idx = (
            (lay_pers >= triple[2]).astype(np.int8)
            + (lay_pers >= triple[1]).astype(np.int8)
            + (lay_pers >= triple[0]).astype(np.int8)
        )
        color_by_idx = (Color.GREEN, Color.AMBER, Color.ORANGE, Color.RED)

        cards: list[ScoreCard] = []
        for li, scope_id in enumerate(self._layer_scope):
            cards.append(
                ScoreCard(
                    scope=Scope.LAYER, scope_id=scope_id,
                    es=float(self._lay_es[li]), p_fail=float(self._lay_viol[li]),
                    raw=float(self._lay_raw[li]), persisted=float(lay_pers[li]),
                    color=color_by_idx[lay_color_idx[li]], at=at,
                )
            )
        for d in range(D):
            li = int(dc_best[d])
            cards.append(
                ScoreCard(
                    scope=Scope.DATACENTER, scope_id=self._dc_scope[d],
                    es=float(self._lay_es[li]), p_fail=float(self._lay_viol[li]),
                    raw=float(self._lay_raw[li]), persisted=float(dc_pers[d]),
                    color=dc_colors[self._dc_scope[d]], at=at,
                )
            )
        for r in self._scored_regions:
            region_id = self.fleet.regions[r]
            d = int(reg_best_dc[r])
            li = int(dc_best[d])
            cards.append(
                ScoreCard(
                    scope=Scope.REGION, scope_id=region_id,
                    es=float(self._lay_es[li]), p_fail=float(self._lay_viol[li]),
                    raw=float(self._lay_raw[li]), persisted=float(dc_pers[d]),
                    color=reg_colors[region_id], at=at,
                )
            )

        # persistence budgets burn while a scope stays elevated
        tick_days = self.config.tick_days
        lay_elev = lay_color_idx >= 1
        self._lay_days = np.minimum(366.0, self._lay_days + np.where(lay_elev, tick_days, 0.0))
        for d in range(D):
            if dc_colors[self._dc_scope[d]].elevated:
                self._dc_days[d] = min(366.0, self._dc_days[d] + tick_days)
        for r in self._scored_regions:
            if reg_colors[self.fleet.regions[r]].elevated:
                self._reg_days[r] = min(366.0, self._reg_days[r] + tick_days)

        self._tick += 1
        self._prev_day = day
        self.current = TickState(
            at=at, cards=tuple(cards),
            thresholds_dc=thresholds_dc, thresholds_region=thresholds_region,
        )
        return self.current

    # ------------------------------------------------------------------
    # snapshots for what-if evaluation and the service
    def fleet_state(self) -> FabricTopology:
        """Topology snapshot with element states as of the latest tick."""
        out = self.fleet
        datacenters = []
        for d, dc in enumerate(out.datacenters):
            layers = []
            for l, layer in enumerate(dc.layers):
                lo, hi = self._layer_slice[self._layer_index(d, l)]
                elements = tuple(
                    replace(elem, state=_CODE_STATE[int(self._state[lo + i])])
                    if _STATE_CODE[elem.state] != self._state[lo + i]
                    else elem
                    for i, elem in enumerate(layer.elements)
                )
                layers.append(replace(layer, elements=elements))
            datacenters.append(replace(dc, layers=tuple(layers)))
        return replace(out, datacenters=tuple(datacenters))

    def _layer_index(self, d: int, l: int) -> int:
        return self._layer_index_map[(d, l)]

    def hazards(self) -> dict[str, ElementHazard]:
        """Per-element hazards as of the latest tick."""
        day = self._prev_day if self._tick else 0.0
        lo = np.searchsorted(self._count_days, day - TRAILING_WINDOW_DAYS, side="right")
        hi = np.searchsorted(self._count_days, day, side="right")
        counts = np.bincount(self._count_eidx[lo:hi], minlength=len(self._eids))
        exposure = TRAILING_WINDOW_DAYS / DAYS_PER_YEAR
        out = {}
        for i, eid in enumerate(self._eids):
            rate = max(float(counts[i]) / exposure, self.weights.min_rate_per_year)
            out[eid] = ElementHazard(
                element_id=eid, rate_per_year=rate, p_fail_horizon=float(self._p[i])
            )
        return out

    def persistence_states(self) -> dict[str, PersistenceState]:
        """Elevated-day bookkeeping for every scope as of the latest tick."""
        states: dict[str, PersistenceState] = {}
        for li, sid in enumerate(self._layer_scope):
            states[sid] = PersistenceState(scope_id=sid, elevated_days_ytd=float(self._lay_days[li]), year=self._year)
        for d, sid in enumerate(self._dc_scope):
            states[sid] = PersistenceState(scope_id=sid, elevated_days_ytd=float(self._dc_days[d]), year=self._year)
        for r, rid in enumerate(self.fleet.regions):
            states[rid] = PersistenceState(scope_id=rid, elevated_days_ytd=float(self._reg_days[r]), year=self._year)
        return states


_CODE_STATE = {_UP: ElementState.UP, _FAILED: ElementState.FAILED, _DRAINED: ElementState.DRAINED}


@dataclass(frozen=True)
class ScenarioResult:
    series: dict[str, ScoreSeries]
    ticks: tuple[TickState, ...]


def run_scenario(
    fleet: FabricTopology,
    history: Sequence[IncidentRecord],
    config: ScenarioConfig,
    *,
    start: datetime = SIM_EPOCH,
    keep_ticks: bool = False,
) -> dict[str, ScoreSeries]:
    """Score every tick of the scenario; returns per-scope score series."""
    return run_scenario_detailed(fleet, history, config, start=start, keep_ticks=keep_ticks).series


def run_scenario_detailed(
    fleet: FabricTopology,
    history: Sequence[IncidentRecord],
    config: ScenarioConfig,
    *,
    start: datetime = SIM_EPOCH,
    keep_ticks: bool = False,
    on_tick: "Callable[[TickState], None] | None" = None,
) -> ScenarioResult:
    engine = ScenarioEngine(fleet, history, config, start=start)
    points: dict[str, list[SeriesPoint]] = {}
    ticks: list[TickState] = []
    last: TickState | None = None
    for _ in range(engine.n_ticks):
        tick = engine.advance()
        for card in tick.cards:
            points.setdefault(card.scope_id, []).append(
                SeriesPoint(at=card.at, persisted=card.persisted, color=card.color)
            )
        if keep_ticks:
            ticks.append(tick)
        if on_tick is not None:
            on_tick(tick)
        last = tick
    if last is not None and not keep_ticks:
        ticks.append(last)
    series = {sid: ScoreSeries(scope_id=sid, points=tuple(pts)) for sid, pts in points.items()}
    return ScenarioResult(series=series, ticks=tuple(ticks))


def scenario_assignments(result: ScenarioResult | Mapping[str, ScoreSeries]) -> list[tuple[str, date, Color]]:
    """Datacenter and region color assignments per tick, for annual audits."""
    series = result.series if isinstance(result, ScenarioResult) else result
    out: list[tuple[str, date, Color]] = []
    for sid in sorted(series):
        if sid.count("/") >= 2:
            continue  # layers are not budget-audited scopes
        for point in series[sid].points:
            out.append((sid, point.at.date(), point.color))
    return out


# ---------------------------------------------------------------------------
# heatmap export
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeatmapCell:
    dc: str
    persisted: float
    color: Color


@dataclass(frozen=True)
class HeatmapRow:
    region: str
    cells: tuple[HeatmapCell, ...]


def export_heatmap(cards: Sequence[ScoreCard]) -> list[HeatmapRow]:
    """Region-by-datacenter table for one tick, cells sorted worst-first."""
    if not cards:
        return []
    stamps = {card.at for card in cards}
    if len(stamps) != 1:
        raise DomainError(f"heatmap needs cards from a single tick, got {len(stamps)} timestamps")
    by_region: dict[str, list[HeatmapCell]] = {}
    for card in cards:
        if card.scope is not Scope.DATACENTER:
            continue
        region, _, dc = card.scope_id.partition("/")
        by_region.setdefault(region, []).append(
            HeatmapCell(dc=dc, persisted=card.persisted, color=card.color)
        )
    rows = []
    for region in sorted(by_region):
        cells = sorted(by_region[region], key=lambda c: (-c.persisted, c.dc))
        rows.append(HeatmapRow(region=region, cells=tuple(cells)))
    return rows


def heatmap_to_csv(rows: Sequence[HeatmapRow]) -> str:
    lines = ["region,dc,persisted,color"]
    for row in rows:
        for cell in row.cells:
            lines.append(f"{row.region},{cell.dc},{cell.persisted!r},{cell.color.value}")
    return "\n".join(lines) + "\n"


def heatmap_to_json(rows: Sequence[HeatmapRow]) -> list[dict]:
    return [
        {
            "region": row.region,
            "cells": [
                {"dc": c.dc, "persisted": c.persisted, "color": c.color.value}
                for c in row.cells
            ],
        }
        for row in rows
    ]


# ---------------------------------------------------------------------------
# scenario spec document
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    """Bundled inputs for one reproducible simulation run."""

    fleet: FleetGenSpec
    scenario: ScenarioConfig
    history_seed: int = 4242
    preroll_days: int = 730


def scenario_spec_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "fleet": {
            "seed": spec.fleet.seed,
            "n_regions": spec.fleet.n_regions,
            "n_datacenters": spec.fleet.n_datacenters,
            "layers_per_dc": spec.fleet.layers_per_dc,
            "elements_per_layer": list(spec.fleet.elements_per_layer),
            "element_capacity": list(spec.fleet.element_capacity),
            "demand_fraction": list(spec.fleet.demand_fraction),
        },
        "scenario": {
            "duration_days": spec.scenario.duration_days,
            "tick_days": spec.scenario.tick_days,
            "base_fail_rate_per_year": list(spec.scenario.base_fail_rate_per_year),
            "mean_repair_days": spec.scenario.mean_repair_days,
        },
        "budget": {k: getattr(spec.scenario.budget, k) for k in (
            "red_frac", "orange_frac", "amber_frac", "tolerance", "score_floor",
            "t_pers", "horizon_years", "beta", "kappa",
        )},
        "history_seed": spec.history_seed,
        "preroll_days": spec.preroll_days,
    }


def _pair(value: object, path: str, integer: bool = False) -> tuple:
    if not isinstance(value, list) or len(value) != 2:
        raise SchemaError("expected a [lo, hi] pair", path)
    if integer and not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise SchemaError("expected an integer [lo, hi] pair", path)
    return tuple(value)


def scenario_spec_from_dict(doc: object) -> ScenarioSpec:
    from .storage import _require_keys, budget_from_dict  # shared strict decoding

    top = _require_keys(doc, set(), {"fleet", "scenario", "budget", "history_seed", "preroll_days"}, "/")
    fleet_doc = _require_keys(top.get("fleet", {}), set(), {
        "seed", "n_regions", "n_datacenters", "layers_per_dc",
        "elements_per_layer", "element_capacity", "demand_fraction",
    }, "/fleet")
    fleet_kwargs: dict = {}
    for key in ("seed", "n_regions", "n_datacenters", "layers_per_dc"):
        if key in fleet_doc:
            value = fleet_doc[key]
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(f"{key} must be an integer", "/fleet")
            fleet_kwargs[key] = value
    if "elements_per_layer" in fleet_doc:
        fleet_kwargs["elements_per_layer"] = _pair(fleet_doc["elements_per_layer"], "/fleet/elements_per_layer", integer=True)
    if "element_capacity" in fleet_doc:
        fleet_kwargs["element_capacity"] = _pair(fleet_doc["element_capacity"], "/fleet/element_capacity", integer=True)
    if "demand_fraction" in fleet_doc:
        fleet_kwargs["demand_fraction"] = _pair(fleet_doc["demand_fraction"], "/fleet/demand_fraction")

    scen_doc = _require_keys(top.get("scenario", {}), set(), {
        "duration_days", "tick_days", "base_fail_rate_per_year", "mean_repair_days",
    }, "/scenario")
    scen_kwargs: dict = {}
    if "duration_days" in scen_doc:
        if isinstance(scen_doc["duration_days"], bool) or not isinstance(scen_doc["duration_days"], int):
            raise SchemaError("duration_days must be an integer", "/scenario")
        scen_kwargs["duration_days"] = scen_doc["duration_days"]
    if "tick_days" in scen_doc:
        scen_kwargs["tick_days"] = float(scen_doc["tick_days"])
    if "base_fail_rate_per_year" in scen_doc:
        scen_kwargs["base_fail_rate_per_year"] = tuple(
            float(v) for v in _pair(scen_doc["base_fail_rate_per_year"], "/scenario/base_fail_rate_per_year")
        )
    if "mean_repair_days" in scen_doc:
        scen_kwargs["mean_repair_days"] = float(scen_doc["mean_repair_days"])

    budget = budget_from_dict(top.get("budget", {}), "/budget")
    history_seed = top.get("history_seed", 4242)
    preroll_days = top.get("preroll_days", 730)
    for name, value in (("history_seed", history_seed), ("preroll_days", preroll_days)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(f"{name} must be an integer", f"/{name}")
    if preroll_days < 0:
        raise SchemaError("preroll_days must be >= 0", "/preroll_days")

    try:
        return ScenarioSpec(
            fleet=FleetGenSpec(**fleet_kwargs),
            scenario=ScenarioConfig(budget=budget, **scen_kwargs),
            history_seed=history_seed,
            preroll_days=preroll_days,
        )
    except ValueError as exc:
        raise SchemaError(str(exc), "/") from None


def run_spec(spec: ScenarioSpec) -> tuple[FabricTopology, list[IncidentRecord], ScenarioResult]:
    """Generate fleet + history for a spec and run the scenario end-to-end."""
    fleet = generate_fleet(spec.fleet)
    window = replace(
        spec.scenario, duration_days=spec.preroll_days + spec.scenario.duration_days
    )
    history = generate_history(
        fleet, window, spec.history_seed,
        end=SIM_EPOCH + timedelta(days=spec.scenario.duration_days),
    )
    result = run_scenario_detailed(fleet, history, spec.scenario)
    return fleet, history, result
