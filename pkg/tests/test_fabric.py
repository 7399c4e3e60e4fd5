from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ansc.errors import DomainError, NotFoundError
from ansc.fabric import (
    CapacityElement,
    ClosLayer,
    Datacenter,
    ElementKind,
    ElementState,
    FabricTopology,
    LayerTier,
    apply_state_change,
    available_capacity,
    validate,
)

from conftest import T0, make_element, make_layer


class TestAvailableCapacity:
    def test_sums_up_elements(self):
        layer = make_layer(capacities=[10, 10], demand=15)
        assert available_capacity(layer) == 20

    def test_failed_excluded(self):
        layer = make_layer(capacities=[10, 10], states=[ElementState.FAILED, ElementState.UP])
        assert available_capacity(layer) == 10

    def test_all_drained_is_zero(self):
        layer = make_layer(capacities=[10, 10], states=[ElementState.DRAINED] * 2)
        assert available_capacity(layer) == 0

    @given(
        caps=st.lists(st.integers(min_value=0, max_value=100), min_size=1, max_size=12),
        states=st.lists(st.sampled_from(list(ElementState)), min_size=12, max_size=12),
    )
    def test_never_exceeds_installed(self, caps, states):
        layer = make_layer(capacities=caps, states=states[: len(caps)])
        assert 0 <= layer.available_capacity <= layer.installed_capacity
        if all(s is ElementState.UP for s in states[: len(caps)]):
            assert layer.available_capacity == layer.installed_capacity


class TestApplyStateChange:
    def test_marks_element_failed(self, fleet2):
        out = apply_state_change(fleet2, "dc0/l0/e1", ElementState.FAILED)
        assert out.element("dc0/l0/e1").state is ElementState.FAILED
        # input untouched (value semantics)
        assert fleet2.element("dc0/l0/e1").state is ElementState.UP

    def test_repair_restores_capacity(self, fleet2):
        failed = apply_state_change(fleet2, "dc0/l0/e1", ElementState.FAILED)
        restored = apply_state_change(failed, "dc0/l0/e1", ElementState.UP)
        layer = restored.datacenter("dc0").layers[0]
        assert layer.available_capacity == fleet2.datacenter("dc0").layers[0].available_capacity

    def test_unknown_element(self, fleet2):
        with pytest.raises(NotFoundError):
            apply_state_change(fleet2, "nope", ElementState.FAILED)

    def test_idempotent(self, fleet2):
        once = apply_state_change(fleet2, "dc0/l0/e1", ElementState.DRAINED)
        twice = apply_state_change(once, "dc0/l0/e1", ElementState.DRAINED)
        assert once == twice


class TestValidate:
    def test_well_formed_fleet(self, fleet2):
        assert validate(fleet2) == []

    def test_duplicate_datacenter_id(self):
        dc = Datacenter(id="dc0", region_id="region-a", layers=(make_layer(),))
        fleet = FabricTopology(regions=("region-a",), datacenters=(dc, dc), created_at=T0)
        violations = validate(fleet)
        assert len(violations) >= 1
        assert any("dc0" in v.message and "duplicate" in v.message for v in violations)

    def test_empty_layer(self):
        layer = ClosLayer(id="l0", tier=LayerTier.TOR, elements=(), demand_forecast=5)
        dc = Datacenter(id="dc0", region_id="region-a", layers=(layer,))
        fleet = FabricTopology(regions=("region-a",), datacenters=(dc,), created_at=T0)
        violations = validate(fleet)
        assert len(violations) == 1
        assert "no elements" in violations[0].message

    def test_unknown_region_reference(self):
        dc = Datacenter(id="dc0", region_id="missing", layers=(make_layer(),))
        fleet = FabricTopology(regions=("region-a",), datacenters=(dc,), created_at=T0)
        assert any("unknown region" in v.message for v in validate(fleet))

    def test_duplicate_element_id(self):
        elem = make_element("shared")
        layer_a = ClosLayer(id="a", tier=LayerTier.TOR, elements=(elem,), demand_forecast=5)
        layer_b = ClosLayer(id="b", tier=LayerTier.AGG, elements=(elem,), demand_forecast=5)
        dc = Datacenter(id="dc0", region_id="region-a", layers=(layer_a, layer_b))
        fleet = FabricTopology(regions=("region-a",), datacenters=(dc,), created_at=T0)
        assert any("duplicate element" in v.message for v in validate(fleet))


class TestConstructionInvariants:
    def test_negative_capacity_rejected(self):
        with pytest.raises(DomainError):
            CapacityElement(id="e", kind=ElementKind.DEVICE, capacity=-1)

    def test_fractional_capacity_rejected(self):
        with pytest.raises(DomainError):
            CapacityElement(id="e", kind=ElementKind.DEVICE, capacity=10.5)  # type: ignore[arg-type]

    def test_integral_float_capacity_rejected(self):
        with pytest.raises(DomainError):
            CapacityElement(id="e", kind=ElementKind.DEVICE, capacity=10.0)  # type: ignore[arg-type]

    def test_negative_demand_rejected(self):
        with pytest.raises(DomainError):
            make_layer(demand=-5)

    def test_enum_coercion_from_strings(self):
        elem = CapacityElement(id="e", kind="link", capacity=5, state="drained")  # type: ignore[arg-type]
        assert elem.kind is ElementKind.LINK
        assert elem.state is ElementState.DRAINED

    def test_lookup_helpers(self, fleet2):
        dc, layer = fleet2.layer_of("dc1/l0/e2")
        assert dc.id == "dc1"
        assert layer.id == "l0"
        with pytest.raises(NotFoundError):
            fleet2.datacenter("dc9")

    def test_generated_fleets_validate_for_many_seeds(self):
        from ansc.simulator import FleetGenSpec, generate_fleet

        for seed in (0, 1, 7, 1234, 2**63 - 1):
            fleet = generate_fleet(FleetGenSpec(seed=seed, n_regions=3, n_datacenters=7))
            assert validate(fleet) == []
