from __future__ import annotations

import math
from datetime import timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ansc.calibration import BudgetConfig
from ansc.errors import ConfigurationError, DomainError
from ansc.fabric import ClosLayer, Datacenter, ElementState, LayerTier
from ansc.hazard import ElementHazard
from ansc.scoring import (
    Color,
    PersistenceState,
    Scope,
    ScoreCard,
    ScoreSeries,
    SeriesPoint,
    effective_safety_margin,
    layer_cards,
    map_color,
    persistence_adjust,
    posture_and_movement,
    raw_score,
    score_datacenter,
    score_layer,
    score_region,
)

from conftest import T0, make_element


THRESHOLDS = (0.96, 0.84, 0.64)


def hazard_for(eid: str, p: float) -> ElementHazard:
    return ElementHazard(element_id=eid, rate_per_year=1.0, p_fail_horizon=p)


def single_element_layer(layer_id: str, dc_id: str, p: float, demand: int = 5):
    """One 10-unit element with P(loss > 5) = p, so raw == p."""
    elem = make_element(f"{dc_id}/{layer_id}/e0", 10)
    layer = ClosLayer(id=layer_id, tier=LayerTier.AGG, elements=(elem,), demand_forecast=demand)
    return layer, {elem.id: hazard_for(elem.id, p)}


def dc_with_layer_scores(dc_id: str, region: str, scores: list[float]):
    layers = []
    hazards = {}
    for i, p in enumerate(scores):
        layer, hz = single_element_layer(f"l{i}", dc_id, p)
        layers.append(layer)
        hazards.update(hz)
    return Datacenter(id=dc_id, region_id=region, layers=tuple(layers)), hazards


class TestEffectiveSafetyMargin:
    def test_positive_margin(self):
        assert effective_safety_margin(100, 80) == 0.25

    def test_zero_margin(self):
        assert effective_safety_margin(80, 80) == 0.0

    def test_negative_margin(self):
        assert effective_safety_margin(60, 80) == -0.25

    def test_no_demand_sentinels(self):
        assert effective_safety_margin(10, 0) == math.inf
        assert effective_safety_margin(0, 0) == 0.0

    @pytest.mark.parametrize("ca,cr", [(-1, 5), (5, -1)])
    def test_negative_inputs_rejected(self, ca, cr):
        with pytest.raises(DomainError):
            effective_safety_margin(ca, cr)

    @given(ca=st.integers(min_value=0, max_value=10**9), cr=st.integers(min_value=1, max_value=10**9))
    def test_exact_rational_evaluation(self, ca, cr):
        from fractions import Fraction

        assert effective_safety_margin(ca, cr) == float(Fraction(ca - cr, cr))


class TestRawScore:
    def test_violation_dominates(self):
        assert raw_score(-0.1, 0.05) == 1.0

    def test_pass_through(self):
        assert raw_score(0.25, 0.3) == 0.3

    def test_zero(self):
        assert raw_score(0.0, 0.0) == 0.0

    def test_out_of_range_p(self):
        with pytest.raises(DomainError):
            raw_score(0.5, 1.5)

    @given(
        es=st.floats(min_value=-2, max_value=2, allow_nan=False),
        p1=st.floats(min_value=0, max_value=1),
        p2=st.floats(min_value=0, max_value=1),
    )
    def test_monotonicity(self, es, p1, p2):
        lo, hi = sorted([p1, p2])
        assert raw_score(es, lo) <= raw_score(es, hi)
        if es >= 0:
            assert raw_score(-0.1, p1) >= raw_score(es, p1)


class TestPersistenceAdjust:
    def test_within_budget_is_identity(self):
        state = PersistenceState("x", elevated_days_ytd=18.25, year=2025)
        assert persistence_adjust(0.4, state, t_pers=0.1, kappa=0.5) == 0.4

    def test_double_budget_escalates(self):
        state = PersistenceState("x", elevated_days_ytd=73.0, year=2025)
        assert persistence_adjust(0.4, state, t_pers=0.1, kappa=0.5) == pytest.approx(0.6)

    def test_clamped_at_one(self):
        state = PersistenceState("x", elevated_days_ytd=365.0, year=2025)
        assert persistence_adjust(0.9, state, t_pers=0.1, kappa=1.0) == 1.0

    def test_bad_budget_config(self):
        state = PersistenceState("x")
        with pytest.raises(ConfigurationError):
            persistence_adjust(0.4, state, t_pers=0.0)
        with pytest.raises(ConfigurationError):
            persistence_adjust(0.4, state, t_pers=0.1, kappa=-1)

    @given(
        raw=st.floats(min_value=0, max_value=1),
        days=st.floats(min_value=0, max_value=366),
        t_pers=st.floats(min_value=0.01, max_value=1.0),
        kappa=st.floats(min_value=0, max_value=5),
    )
    def test_never_below_raw_and_equal_within_budget(self, raw, days, t_pers, kappa):
        state = PersistenceState("x", elevated_days_ytd=days, year=2025)
        persisted = persistence_adjust(raw, state, t_pers, kappa)
        assert persisted >= raw
        assert persisted <= 1.0
        if days <= 365 * t_pers:
            assert persisted == raw

    def test_state_advance_and_year_rollover(self):
        state = PersistenceState("x", elevated_days_ytd=10.0, year=2025)
        later = state.advanced(Color.ORANGE, 1.0, T0)
        assert later.elevated_days_ytd == 11.0
        green = later.advanced(Color.GREEN, 1.0, T0)
        assert green.elevated_days_ytd == 11.0
        rolled = green.advanced(Color.RED, 1.0, T0.replace(year=2026))
        assert rolled.year == 2026
        assert rolled.elevated_days_ytd == 1.0


class TestMapColor:
    def test_red_at_or_above(self):
        assert map_color(0.97, THRESHOLDS) is Color.RED

    def test_green_below_amber(self):
        assert map_color(0.5, THRESHOLDS) is Color.GREEN

    def test_boundary_inclusive_upward(self):
        assert map_color(0.84, THRESHOLDS) is Color.ORANGE
        assert map_color(0.96, THRESHOLDS) is Color.RED
        assert map_color(0.64, THRESHOLDS) is Color.AMBER

    def test_unordered_thresholds_rejected(self):
        with pytest.raises(ConfigurationError):
            map_color(0.5, (0.5, 0.8, 0.2))

    @given(a=st.floats(min_value=0, max_value=1), b=st.floats(min_value=0, max_value=1))
    def test_monotone_step_function(self, a, b):
        lo, hi = sorted([a, b])
        assert map_color(lo, THRESHOLDS).severity <= map_color(hi, THRESHOLDS).severity


class TestScoreAggregation:
    def test_dc_takes_worst_layer(self):
        dc, hazards = dc_with_layer_scores("dc1", "region-a", [0.1, 0.6, 0.3])
        card = score_datacenter(dc, hazards, BudgetConfig(), at=T0)
        assert card.scope is Scope.DATACENTER
        assert card.scope_id == "region-a/dc1"
        assert card.persisted == pytest.approx(0.6)
        assert card.p_fail == pytest.approx(0.6)

    def test_single_layer_dc_is_relabeled_layer_card(self):
        dc, hazards = dc_with_layer_scores("dc1", "region-a", [0.42])
        budget = BudgetConfig()
        dc_card = score_datacenter(dc, hazards, budget, at=T0)
        layer_card = layer_cards(dc, hazards, budget, at=T0)[0]
        assert dc_card.persisted == layer_card.persisted
        assert dc_card.es == layer_card.es
        assert dc_card.raw == layer_card.raw
        assert dc_card.scope_id == "region-a/dc1"
        assert layer_card.scope_id == "region-a/dc1/l0"

    def test_tie_breaks_to_smaller_layer_id(self):
        dc, hazards = dc_with_layer_scores("dc1", "region-a", [0.6, 0.6])
        cards = layer_cards(dc, hazards, BudgetConfig(), at=T0)
        dc_card = score_datacenter(dc, hazards, BudgetConfig(), at=T0)
        assert cards[0].scope_id == "region-a/dc1/l0"
        assert dc_card.persisted == cards[0].persisted

    def test_region_max_and_tie_rule(self):
        dc_a, hz_a = dc_with_layer_scores("dca", "region-a", [0.5])
        dc_b, hz_b = dc_with_layer_scores("dcb", "region-a", [0.5])
        budget = BudgetConfig()
        card_a = score_datacenter(dc_a, hz_a, budget, at=T0)
        card_b = score_datacenter(dc_b, hz_b, budget, at=T0)
        region = score_region([card_b, card_a])
        assert region.scope is Scope.REGION
        assert region.scope_id == "region-a"
        assert region.persisted == pytest.approx(0.5)

    def test_region_requires_cards(self):
        with pytest.raises(DomainError):
            score_region([])

    def test_region_rejects_mixed_regions(self):
        dc_a, hz_a = dc_with_layer_scores("dca", "region-a", [0.5])
        dc_b, hz_b = dc_with_layer_scores("dcb", "region-b", [0.5])
        budget = BudgetConfig()
        with pytest.raises(DomainError):
            score_region([
                score_datacenter(dc_a, hz_a, budget, at=T0),
                score_datacenter(dc_b, hz_b, budget, at=T0),
            ])

    def test_rescaling_preserves_argmax(self):
        dc, hazards = dc_with_layer_scores("dc1", "region-a", [0.2, 0.8, 0.4])
        budget = BudgetConfig()
        base = score_datacenter(dc, hazards, budget, at=T0)
        scaled_hz = {k: hazard_for(k, v.p_fail_horizon / 2) for k, v in hazards.items()}
        scaled = score_datacenter(dc, scaled_hz, budget, at=T0)
        assert base.p_fail == pytest.approx(0.8)
        assert scaled.p_fail == pytest.approx(0.4)

    def test_failed_layer_scores_one(self):
        elem = make_element("dc1/l0/e0", 10, ElementState.FAILED)
        layer = ClosLayer(id="l0", tier=LayerTier.AGG, elements=(elem,), demand_forecast=5)
        card = score_layer(layer, {}, BudgetConfig(), at=T0)
        assert card.es == -1.0
        assert card.raw == 1.0


class TestPostureAndMovement:
    def make_series(self, values):
        points = tuple(
            SeriesPoint(at=T0 + timedelta(days=i), persisted=v, color=Color.GREEN)
            for i, v in enumerate(values)
        )
        return ScoreSeries(scope_id="x", points=points)

    def test_ceiling_and_movement(self):
        ceiling, movement = posture_and_movement(self.make_series([0.2, 0.3, 0.25]), 3)
        assert ceiling == pytest.approx(0.3)
        assert movement == pytest.approx(0.05)

    def test_constant_series(self):
        ceiling, movement = posture_and_movement(self.make_series([0.4, 0.4, 0.4]), 3)
        assert (ceiling, movement) == (0.4, 0.0)

    def test_improving_series(self):
        ceiling, movement = posture_and_movement(self.make_series([0.5, 0.4, 0.3]), 3)
        assert ceiling == 0.5
        assert movement < 0

    def test_window_validation(self):
        series = self.make_series([0.1, 0.2])
        with pytest.raises(DomainError):
            posture_and_movement(series, 1)
        with pytest.raises(DomainError):
            posture_and_movement(series, 3)

    def test_series_requires_increasing_timestamps(self):
        point = SeriesPoint(at=T0, persisted=0.5, color=Color.GREEN)
        with pytest.raises(DomainError):
            ScoreSeries(scope_id="x", points=(point, point))


class TestScoreCard:
    def test_persisted_must_dominate_raw(self):
        with pytest.raises(DomainError):
            ScoreCard(
                scope=Scope.LAYER, scope_id="x", es=0.1, p_fail=0.5,
                raw=0.5, persisted=0.4, color=Color.GREEN, at=T0,
            )

    def test_infinite_es_allowed(self):
        card = ScoreCard(
            scope=Scope.LAYER, scope_id="x", es=math.inf, p_fail=0.0,
            raw=0.0, persisted=0.0, color=Color.GREEN, at=T0,
        )
        assert math.isinf(card.es)
