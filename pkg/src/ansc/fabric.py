"""Immutable fleet model: regions, datacenters, Clos layers, capacity elements.

Everything here is a frozen value type.  Mutation happens only through
copy-producing operations (:func:`apply_state_change`), so snapshots can be
shared freely across threads and what-if evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from functools import cached_property
from typing import Iterator, Mapping

from ._validation import check_capacity_units
from .errors import NotFoundError


class ElementKind(str, Enum):
    DEVICE = "device"
    LINK = "link"


class ElementState(str, Enum):
    UP = "up"
    FAILED = "failed"
    DRAINED = "drained"


class LayerTier(str, Enum):
    TOR = "tor"
    AGG = "agg"
    SPINE = "spine"


@dataclass(frozen=True)
class CapacityElement:
    """A device or link contributing ``capacity`` units (1 unit = 1 Gbps)."""

    id: str
    kind: ElementKind
    capacity: int
    state: ElementState = ElementState.UP

    def __post_init__(self) -> None:
        check_capacity_units(self.capacity, f"element {self.id!r} capacity")
        object.__setattr__(self, "kind", ElementKind(self.kind))
        object.__setattr__(self, "state", ElementState(self.state))


@dataclass(frozen=True)
class ClosLayer:
    """A Clos tier: parallel elements serving one demand forecast."""

    id: str
    tier: LayerTier
    elements: tuple[CapacityElement, ...]
    demand_forecast: int

    def __post_init__(self) -> None:
        check_capacity_units(self.demand_forecast, f"layer {self.id!r} demand_forecast")
        object.__setattr__(self, "tier", LayerTier(self.tier))
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def installed_capacity(self) -> int:
        return sum(e.capacity for e in self.elements)

    @property
    def available_capacity(self) -> int:
        return sum(e.capacity for e in self.elements if e.state is ElementState.UP)


@dataclass(frozen=True)
class Datacenter:
    id: str
    region_id: str
    layers: tuple[ClosLayer, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class FabricTopology:
    """The whole fleet.  ``regions`` is the authoritative region list."""

    regions: tuple[str, ...]
    datacenters: tuple[Datacenter, ...]
    created_at: datetime

    def __post_init__(self) -> None:
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "datacenters", tuple(self.datacenters))
        if self.created_at.tzinfo is None:
            object.__setattr__(self, "created_at", self.created_at.replace(tzinfo=timezone.utc))

    @cached_property
    def _element_index(self) -> Mapping[str, tuple[int, int, int]]:
        index: dict[str, tuple[int, int, int]] = {}
        for d, dc in enumerate(self.datacenters):
            for l, layer in enumerate(dc.layers):
                for e, elem in enumerate(layer.elements):
                    index.setdefault(elem.id, (d, l, e))
        return index

    @cached_property
    def _dc_index(self) -> Mapping[str, int]:
        return {dc.id: i for i, dc in enumerate(self.datacenters)}

    def datacenter(self, dc_id: str) -> Datacenter:
        try:
            return self.datacenters[self._dc_index[dc_id]]
        except KeyError:
            raise NotFoundError(f"unknown datacenter {dc_id!r}") from None

    def element(self, element_id: str) -> CapacityElement:
        d, l, e = self._locate(element_id)
        return self.datacenters[d].layers[l].elements[e]

    def layer_of(self, element_id: str) -> tuple[Datacenter, ClosLayer]:
        d, l, _ = self._locate(element_id)
        dc = self.datacenters[d]
        return dc, dc.layers[l]

    def iter_layers(self) -> Iterator[tuple[Datacenter, ClosLayer]]:
        for dc in self.datacenters:
            for layer in dc.layers:
                yield dc, layer

    def _locate(self, element_id: str) -> tuple[int, int, int]:
        try:
            return self._element_index[element_id]
        except KeyError:
            raise NotFoundError(f"unknown element {element_id!r}") from None


@dataclass(frozen=True)
class Violation:
    """One invariant breach found by :func:`validate`; ``path`` names the entity."""

    path: str
    message: str


def available_capacity(layer: ClosLayer) -> int:
    """Capacity units currently contributed by elements in state ``up``."""
    return layer.available_capacity


def apply_state_change(
    topology: FabricTopology, element_id: str, new_state: ElementState
) -> FabricTopology:
    """Return a copy of ``topology`` with one element's state replaced.

    The input is left untouched; repeating an identical change is a no-op
    on the result.  Unknown ids raise :class:`NotFoundError`.
    """
    new_state = ElementState(new_state)
    d, l, e = topology._locate(element_id)
    dc = topology.datacenters[d]
    layer = dc.layers[l]
    elem = layer.elements[e]
    if elem.state is new_state:
        return topology
    new_elements = layer.elements[:e] + (replace(elem, state=new_state),) + layer.elements[e + 1 :]
    new_layer = replace(layer, elements=new_elements)
    new_dc = replace(dc, layers=dc.layers[:l] + (new_layer,) + dc.layers[l + 1 :])
    return replace(
        topology, datacenters=topology.datacenters[:d] + (new_dc,) + topology.datacenters[d + 1 :]
    )


def validate(topology: FabricTopology) -> list[Violation]:
    """Check every structural invariant; violations are data, not exceptions."""
    violations: list[Violation] = []
    seen_regions: set[str] = set()
    for region in topology.regions:
        if region in seen_regions:
            violations.append(Violation(region, f"duplicate region id {region!r}"))
        seen_regions.add(region)

    seen_dcs: set[str] = set()
    seen_elements: set[str] = set()
    for dc in topology.datacenters:
        if dc.id in seen_dcs:
            violations.append(Violation(dc.id, f"duplicate datacenter id {dc.id!r}"))
        seen_dcs.add(dc.id)
        if dc.region_id not in seen_regions:
            violations.append(
                Violation(dc.id, f"datacenter {dc.id!r} references unknown region {dc.region_id!r}")
            )
        if not dc.layers:
            violations.append(Violation(dc.id, f"datacenter {dc.id!r} has no layers"))
        seen_layers: set[str] = set()
        for layer in dc.layers:
            path = f"{dc.id}/{layer.id}"
            if layer.id in seen_layers:
                violations.append(Violation(path, f"duplicate layer id {layer.id!r} in {dc.id!r}"))
            seen_layers.add(layer.id)
            if not layer.elements:
                violations.append(Violation(path, f"layer {path!r} has no elements"))
            if layer.demand_forecast < 0:
                violations.append(Violation(path, "demand_forecast must be >= 0"))
            for elem in layer.elements:
                epath = f"{path}/{elem.id}"
                if elem.capacity < 0:
                    violations.append(Violation(epath, "capacity must be >= 0"))
                if elem.id in seen_elements:
                    violations.append(Violation(epath, f"duplicate element id {elem.id!r}"))
                seen_elements.add(elem.id)
    return violations
