"""Hypothetical remediation analysis against a frozen fleet snapshot.

Actions apply in list order to a copy of the snapshot; scores are recomputed
against the CURRENT thresholds (no recalibration, so a what-if never moves
the goalposts) and persistence clocks do not advance.  The input snapshot is
never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Mapping, Sequence

from .calibration import BudgetConfig, Thresholds
from .errors import DomainError, NotFoundError, SchemaError
from .fabric import (
    CapacityElement,
    ClosLayer,
    Datacenter,
    ElementKind,
    ElementState,
    FabricTopology,
    apply_state_change,
)
from .hazard import ConditionWeights, ElementHazard
from .scoring import (
    PersistenceState,
    Scope,
    ScoreCard,
    dc_scope_id,
    effective_safety_margin,
    layer_cards,
    map_color,
    score_region,
)


class ActionKind(str, Enum):
    REPAIR_ELEMENT = "repair_element"
    DRAIN_ELEMENT = "drain_element"
    UNDRAIN_ELEMENT = "undrain_element"
    ADD_CAPACITY = "add_capacity"
    REPLACE_ELEMENT = "replace_element"


_ELEMENT_KINDS = {
    ActionKind.REPAIR_ELEMENT,
    ActionKind.DRAIN_ELEMENT,
    ActionKind.UNDRAIN_ELEMENT,
    ActionKind.REPLACE_ELEMENT,
}


@dataclass(frozen=True)
class Action:
    """One remediation step; ``add_capacity`` targets a layer as ``dc_id/layer_id``."""

    kind: ActionKind
    element_id: str | None = None
    layer_id: str | None = None
    amount: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ActionKind(self.kind))
        if self.kind in _ELEMENT_KINDS:
            if not self.element_id:
                raise DomainError(f"{self.kind.value} requires element_id")
            if self.layer_id or self.amount is not None:
                raise DomainError(f"{self.kind.value} accepts only element_id")
        else:
            if not self.layer_id:
                raise DomainError("add_capacity requires layer_id (dc_id/layer_id)")
            if self.element_id:
                raise DomainError("add_capacity targets a layer, not an element")
            if not isinstance(self.amount, int) or isinstance(self.amount, bool) or self.amount <= 0:
                raise DomainError(f"add_capacity amount must be a positive integer, got {self.amount!r}")


def action_to_dict(action: Action) -> dict:
    doc: dict = {"kind": action.kind.value}
    if action.element_id is not None:
        doc["element_id"] = action.element_id
    if action.layer_id is not None:
        doc["layer_id"] = action.layer_id
    if action.amount is not None:
        doc["amount"] = action.amount
    return doc


def action_from_dict(doc: object, path: str = "") -> Action:
    if not isinstance(doc, dict):
        raise SchemaError("action must be an object", path)
    unknown = set(doc) - {"kind", "element_id", "layer_id", "amount"}
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}", path)
    if "kind" not in doc:
        raise SchemaError("missing key 'kind'", path)
    try:
        return Action(
            kind=doc["kind"],
            element_id=doc.get("element_id"),
            layer_id=doc.get("layer_id"),
            amount=doc.get("amount"),
        )
    except ValueError as exc:
        raise SchemaError(str(exc), path) from None


@dataclass(frozen=True)
class WhatIfResult:
    """Before/after cards aligned by scope id; ``safe_to_remove`` is set only
    when the action list contained drains."""

    before: tuple[ScoreCard, ...]
    after: tuple[ScoreCard, ...]
    safe_to_remove: bool | None = None


def _locate_layer(fleet: FabricTopology, layer_ref: str) -> tuple[Datacenter, ClosLayer]:
    dc_id, _, layer_id = layer_ref.partition("/")
    if not layer_id:
        raise NotFoundError(f"layer reference must be 'dc_id/layer_id', got {layer_ref!r}")
    dc = fleet.datacenter(dc_id)
    for layer in dc.layers:
        if layer.id == layer_id:
            return dc, layer
    raise NotFoundError(f"unknown layer {layer_ref!r}")


def _floor_hazard(element_id: str, budget: BudgetConfig, weights: ConditionWeights) -> ElementHazard:
    rate = weights.min_rate_per_year
    return ElementHazard(
        element_id=element_id,
        rate_per_year=rate,
        p_fail_horizon=-math.expm1(-rate * budget.horizon_years),
    )


def _add_element(
    fleet: FabricTopology, layer_ref: str, amount: int
) -> tuple[FabricTopology, str]:
    dc, layer = _locate_layer(fleet, layer_ref)
    existing = {e.id for e in layer.elements}
    suffix = 0
    while f"{dc.id}/{layer.id}/add-{suffix:03d}" in existing:
        suffix += 1
    new_id = f"{dc.id}/{layer.id}/add-{suffix:03d}"
    new_elem = CapacityElement(id=new_id, kind=ElementKind.DEVICE, capacity=amount)
    new_layer = replace(layer, elements=layer.elements + (new_elem,))
    d = next(i for i, item in enumerate(fleet.datacenters) if item.id == dc.id)
    l = next(i for i, item in enumerate(dc.layers) if item.id == layer.id)
    new_dc = replace(dc, layers=dc.layers[:l] + (new_layer,) + dc.layers[l + 1 :])
    return (
        replace(fleet, datacenters=fleet.datacenters[:d] + (new_dc,) + fleet.datacenters[d + 1 :]),
        new_id,
    )


def evaluate(
    fleet: FabricTopology,
    hazards: Mapping[str, ElementHazard],
    thresholds: Thresholds,
    actions: Sequence[Action],
    *,
    budget: BudgetConfig,
    weights: ConditionWeights = ConditionWeights(),
    persistence: Mapping[str, PersistenceState] | None = None,
    region_thresholds: Thresholds | None = None,
    at: datetime | None = None,
) -> WhatIfResult:
    """Apply actions to a copy and report before/after cards for every
    affected layer, datacenter, and region."""
    when = at if at is not None else thresholds.calibrated_at
    region_thresholds = region_thresholds if region_thresholds is not None else thresholds

    working = fleet
    working_hazards = dict(hazards)
    affected_layers: set[str] = set()
    drained: list[str] = []

    for action in actions:
        if action.kind is ActionKind.ADD_CAPACITY:
            working, new_id = _add_element(working, action.layer_id, action.amount)  # type: ignore[arg-type]
            working_hazards[new_id] = _floor_hazard(new_id, budget, weights)
            dc, layer = _locate_layer(working, action.layer_id)  # type: ignore[arg-type]
            affected_layers.add(f"{dc.id}/{layer.id}")
            continue
        eid = action.element_id or ""
        dc, layer = working.layer_of(eid)  # raises NotFoundError for unknown targets
        affected_layers.add(f"{dc.id}/{layer.id}")
        if action.kind is ActionKind.DRAIN_ELEMENT:
            working = apply_state_change(working, eid, ElementState.DRAINED)
            drained.append(eid)
        elif action.kind is ActionKind.UNDRAIN_ELEMENT:
            working = apply_state_change(working, eid, ElementState.UP)
        elif action.kind is ActionKind.REPAIR_ELEMENT:
            working = apply_state_change(working, eid, ElementState.UP)
        else:  # replace: repair plus a fresh hazard at the rate floor
            working = apply_state_change(working, eid, ElementState.UP)
            working_hazards[eid] = _floor_hazard(eid, budget, weights)

    affected_dcs = sorted({ref.split("/", 1)[0] for ref in affected_layers})
    affected_regions = sorted({fleet.datacenter(d).region_id for d in affected_dcs})

    before = _cards_for(fleet, dict(hazards), affected_layers, affected_dcs, affected_regions,
                        budget, thresholds, region_thresholds, persistence, when)
    after = _cards_for(working, working_hazards, affected_layers, affected_dcs, affected_regions,
                       budget, thresholds, region_thresholds, persistence, when)

    safe: bool | None = None
    if drained:
        safe = True
        for eid in drained:
            if working.element(eid).state is not ElementState.DRAINED:
                continue  # a later action brought it back
            _, layer = working.layer_of(eid)
            if effective_safety_margin(layer.available_capacity, layer.demand_forecast) < 0:
                safe = False
    return WhatIfResult(before=before, after=after, safe_to_remove=safe)


def _cards_for(
    fleet: FabricTopology,
    hazards: Mapping[str, ElementHazard],
    affected_layers: set[str],
    affected_dcs: Sequence[str],
    affected_regions: Sequence[str],
    budget: BudgetConfig,
    thresholds: Thresholds,
    region_thresholds: Thresholds,
    persistence: Mapping[str, PersistenceState] | None,
    when: datetime,
) -> tuple[ScoreCard, ...]:
    layer_out: list[ScoreCard] = []
    dc_cards: dict[str, ScoreCard] = {}
    dc_all_cards: dict[str, ScoreCard] = {}

    region_members: dict[str, list[str]] = {}
    for dc in fleet.datacenters:
        if dc.region_id in affected_regions:
            region_members.setdefault(dc.region_id, []).append(dc.id)

    needed_dcs = set(affected_dcs) | {d for members in region_members.values() for d in members}
    for dc_id in sorted(needed_dcs):
        dc = fleet.datacenter(dc_id)
        cards = layer_cards(dc, hazards, budget, at=when, persistence=persistence, thresholds=thresholds)
        worst = min(cards, key=lambda c: (-c.persisted, c.scope_id))
        dc_card = replace(worst, scope=Scope.DATACENTER, scope_id=dc_scope_id(dc))
        dc_all_cards[dc_id] = dc_card
        if dc_id in affected_dcs:
            dc_cards[dc_id] = dc_card
            for card in cards:
                if f"{dc.id}/{card.scope_id.split('/')[-1]}" in affected_layers:
                    layer_out.append(card)

    region_out = []
    for region in affected_regions:
        members = [dc_all_cards[d] for d in region_members[region]]
        card = score_region(members)
        region_out.append(replace(card, color=map_color(card.persisted, region_thresholds)))
    dc_out = [card for _, card in sorted(dc_cards.items())]
    layer_out.sort(key=lambda c: c.scope_id)
    return tuple(layer_out) + tuple(dc_out) + tuple(region_out)


def removal_check(fleet: FabricTopology, element_id: str) -> bool:
    """True iff the element's layer keeps a non-negative safety margin after
    draining it.  The element must exist and be up."""
    element = fleet.element(element_id)
    if element.state is not ElementState.UP:
        raise DomainError(f"element {element_id!r} is {element.state.value}, not up")
    drained = apply_state_change(fleet, element_id, ElementState.DRAINED)
    _, layer = drained.layer_of(element_id)
    return effective_safety_margin(layer.available_capacity, layer.demand_forecast) >= 0
