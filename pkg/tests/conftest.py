from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import HealthCheck, settings

from ansc.fabric import (
    CapacityElement,
    ClosLayer,
    Datacenter,
    ElementKind,
    ElementState,
    FabricTopology,
    LayerTier,
)

settings.register_profile(
    "ansc", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ansc")

UTC = timezone.utc
T0 = datetime(2025, 1, 1, tzinfo=UTC)


def make_element(eid: str, capacity: int = 10, state: ElementState = ElementState.UP) -> CapacityElement:
    return CapacityElement(id=eid, kind=ElementKind.DEVICE, capacity=capacity, state=state)


def make_layer(
    layer_id: str = "agg",
    capacities: list[int] | None = None,
    demand: int = 15,
    dc_id: str = "dc1",
    states: list[ElementState] | None = None,
) -> ClosLayer:
    capacities = capacities if capacities is not None else [10, 10, 10]
    states = states if states is not None else [ElementState.UP] * len(capacities)
    elements = tuple(
        make_element(f"{dc_id}/{layer_id}/e{i}", cap, st)
        for i, (cap, st) in enumerate(zip(capacities, states))
    )
    return ClosLayer(id=layer_id, tier=LayerTier.AGG, elements=elements, demand_forecast=demand)


def make_fleet(n_dcs: int = 2, layers_per_dc: int = 1, demand: int = 15) -> FabricTopology:
    regions = ("region-a", "region-b")
    dcs = []
    for d in range(n_dcs):
        dc_id = f"dc{d}"
        layers = tuple(
            make_layer(f"l{l}", [10, 10, 10], demand, dc_id=dc_id) for l in range(layers_per_dc)
        )
        dcs.append(Datacenter(id=dc_id, region_id=regions[d % 2], layers=layers))
    return FabricTopology(regions=regions, datacenters=tuple(dcs), created_at=T0)


@pytest.fixture
def fleet2() -> FabricTopology:
    return make_fleet()


def days(n: float) -> timedelta:
    return timedelta(days=n)
