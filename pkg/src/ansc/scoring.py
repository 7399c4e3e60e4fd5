"""Score computation: safety margin, raw score, persistence escalation,
color mapping, and layer -> datacenter -> region aggregation.

The raw score is an interpretable probability of shortfall: 1.0 when demand
already exceeds available capacity, otherwise the violation probability over
the horizon.  Scopes that stay elevated (amber or worse) past their yearly
persistence budget have the score escalated multiplicatively.  Aggregation
upward is worst-case (max), so a single bad layer surfaces at the datacenter
and region level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import TYPE_CHECKING, Mapping, Sequence

from ._validation import check_non_negative, check_probability
from .errors import ConfigurationError, DomainError, NotFoundError
from .fabric import ClosLayer, Datacenter, ElementState
from .hazard import ElementHazard, LossDistribution, layer_loss_distribution, violation_probability

if TYPE_CHECKING:
    from .calibration import BudgetConfig, Thresholds

DAYS_PER_YEAR = 365.0
DEFAULT_KAPPA = 0.5


class Scope(str, Enum):
    LAYER = "layer"
    DATACENTER = "datacenter"
    REGION = "region"


class Color(str, Enum):
    GREEN = "green"
    AMBER = "amber"
    ORANGE = "orange"
    RED = "red"

    @property
    def severity(self) -> int:
        return _SEVERITY[self]

    @property
    def elevated(self) -> bool:
        """Amber or worse counts against the persistence budget."""
        return self.severity >= Color.AMBER.severity


_SEVERITY = {Color.GREEN: 0, Color.AMBER: 1, Color.ORANGE: 2, Color.RED: 3}


@dataclass(frozen=True)
class ScoreCard:
    scope: Scope
    scope_id: str
    es: float
    p_fail: float
    raw: float
    persisted: float
    color: Color
    at: datetime

    def __post_init__(self) -> None:
        object.__setattr__(self, "scope", Scope(self.scope))
        object.__setattr__(self, "color", Color(self.color))
        check_probability(self.p_fail, "p_fail")
        check_probability(self.raw, "raw")
        check_probability(self.persisted, "persisted")
        if self.persisted < self.raw:
            raise DomainError(
                f"persisted ({self.persisted}) must be >= raw ({self.raw}) for {self.scope_id!r}"
            )


@dataclass(frozen=True)
class PersistenceState:
    """Per-scope bookkeeping of elevated time against the yearly budget."""

    scope_id: str
    elevated_days_ytd: float = 0.0
    year: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.elevated_days_ytd <= 366.0:
            raise DomainError(
                f"elevated_days_ytd must be in [0, 366], got {self.elevated_days_ytd}"
            )

    def advanced(self, color: Color, tick_days: float, at: datetime) -> "PersistenceState":
        """Roll the budget clock forward one tick; resets at year boundaries."""
        days = self.elevated_days_ytd
        year = self.year
        if at.year != year:
            days, year = 0.0, at.year
        if color.elevated:
            days = min(366.0, days + tick_days)
        return PersistenceState(scope_id=self.scope_id, elevated_days_ytd=days, year=year)


@dataclass(frozen=True)
class SeriesPoint:
    at: datetime
    persisted: float
    color: Color


@dataclass(frozen=True)
class ScoreSeries:
    scope_id: str
    points: tuple[SeriesPoint, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.at <= prev.at:
                raise DomainError(f"series {self.scope_id!r} timestamps must strictly increase")


def effective_safety_margin(c_avail: float, c_req: float) -> float:
    """(c_avail - c_req) / c_req; negative means demand exceeds capacity.

    With no demand there is no shortfall risk: returns +inf when spare
    capacity exists and 0.0 for the fully degenerate 0/0 case.
    """
    c_avail = check_non_negative(c_avail, "c_avail")
    c_req = check_non_negative(c_req, "c_req")
    if c_req == 0:
        return math.inf if c_avail > 0 else 0.0
    return (c_avail - c_req) / c_req


def raw_score(es: float, p_viol: float) -> float:
    """1.0 when the margin is already negative, else the violation probability."""
    p_viol = check_probability(p_viol, "p_viol")
    if math.isnan(es):
        raise DomainError("es must not be NaN")
    return 1.0 if es < 0 else p_viol


def persistence_adjust(
    raw: float,
    state: PersistenceState,
    t_pers: float,
    kappa: float = DEFAULT_KAPPA,
) -> float:
    """Escalate a raw score once the yearly elevated-time budget is spent.

    overage = max(0, elevated_days/365 - t_pers) / t_pers;
    result = min(1, raw * (1 + kappa * overage)).  Within budget the score
    passes through unchanged.
    """
    if t_pers <= 0:
        raise ConfigurationError(f"t_pers must be > 0, got {t_pers}")
    if kappa < 0:
        raise ConfigurationError(f"kappa must be >= 0, got {kappa}")
    raw = check_probability(raw, "raw")
    overage = max(0.0, state.elevated_days_ytd / DAYS_PER_YEAR - t_pers) / t_pers
    return min(1.0, raw * (1.0 + kappa * overage))


def _threshold_triple(thresholds: object) -> tuple[float, float, float]:
    if hasattr(thresholds, "t_red"):
        triple = (thresholds.t_red, thresholds.t_orange, thresholds.t_amber)  # type: ignore[attr-defined]
    else:
        triple = tuple(thresholds)  # type: ignore[arg-type]
        if len(triple) != 3:
            raise ConfigurationError("thresholds must be (t_red, t_orange, t_amber)")
    t_red, t_orange, t_amber = (float(t) for t in triple)
    if not 0.0 <= t_amber <= t_orange <= t_red <= 1.0:
        raise ConfigurationError(
            f"thresholds must satisfy 0 <= t_amber <= t_orange <= t_red <= 1, got {triple}"
        )
    return t_red, t_orange, t_amber


def map_color(persisted: float, thresholds: "Thresholds | tuple[float, float, float]") -> Color:
    """Map a persisted score to a color; boundaries are inclusive upward."""
    t_red, t_orange, t_amber = _threshold_triple(thresholds)
    persisted = check_probability(persisted, "persisted")
    if persisted >= t_red:
        return Color.RED
    if persisted >= t_orange:
        return Color.ORANGE
    if persisted >= t_amber:
        return Color.AMBER
    return Color.GREEN


def layer_scope_id(dc: Datacenter, layer: ClosLayer) -> str:
    return f"{dc.region_id}/{dc.id}/{layer.id}"


def dc_scope_id(dc: Datacenter) -> str:
    return f"{dc.region_id}/{dc.id}"


def _elevated_days(persistence: Mapping[str, PersistenceState] | None, scope_id: str) -> PersistenceState:
    if persistence is not None and scope_id in persistence:
        return persistence[scope_id]
    return PersistenceState(scope_id=scope_id)


def score_layer(
    layer: ClosLayer,
    hazards: Mapping[str, ElementHazard],
    config: "BudgetConfig",
    *,
    at: datetime,
    scope_id: str | None = None,
    persistence: Mapping[str, PersistenceState] | None = None,
    thresholds: "Thresholds | tuple[float, float, float] | None" = None,
) -> ScoreCard:
    """Score one layer.  Color is mapped when thresholds are given, else green."""
    sid = scope_id if scope_id is not None else layer.id
    up = [e for e in layer.elements if e.state is ElementState.UP and e.capacity > 0]
    pairs = []
    for elem in up:
        hz = hazards.get(elem.id)
        if hz is None:
            raise NotFoundError(f"no hazard estimate for element {elem.id!r}")
        pairs.append((elem.capacity, hz.p_fail_horizon))
    if pairs:
        loss = layer_loss_distribution(pairs, config.beta)
    else:
        loss = LossDistribution(support=(0,), probs=(1.0,))
    c_avail = layer.available_capacity
    es = effective_safety_margin(c_avail, layer.demand_forecast)
    p_viol = violation_probability(loss, c_avail, layer.demand_forecast)
    raw = raw_score(es, p_viol)
    state = _elevated_days(persistence, sid)
    persisted = persistence_adjust(raw, state, config.t_pers, config.kappa)
    color = map_color(persisted, thresholds) if thresholds is not None else Color.GREEN
    return ScoreCard(
        scope=Scope.LAYER, scope_id=sid, es=es, p_fail=p_viol,
        raw=raw, persisted=persisted, color=color, at=at,
    )


def _argmax_card(cards: Sequence[ScoreCard]) -> ScoreCard:
    # Worst persisted wins; ties break toward the lexicographically smaller id.
    return min(cards, key=lambda c: (-c.persisted, c.scope_id))


def score_datacenter(
    dc: Datacenter,
    hazards: Mapping[str, ElementHazard],
    config: "BudgetConfig",
    *,
    at: datetime,
    persistence: Mapping[str, PersistenceState] | None = None,
    thresholds: "Thresholds | tuple[float, float, float] | None" = None,
) -> ScoreCard:
    """Worst-layer rollup: the datacenter card is the arg-max layer's card
    relabeled to datacenter scope."""
    cards = layer_cards(dc, hazards, config, at=at, persistence=persistence, thresholds=thresholds)
    worst = _argmax_card(cards)
    return replace(worst, scope=Scope.DATACENTER, scope_id=dc_scope_id(dc))


def layer_cards(
    dc: Datacenter,
    hazards: Mapping[str, ElementHazard],
    config: "BudgetConfig",
    *,
    at: datetime,
    persistence: Mapping[str, PersistenceState] | None = None,
    thresholds: "Thresholds | tuple[float, float, float] | None" = None,
) -> list[ScoreCard]:
    if not dc.layers:
        raise DomainError(f"datacenter {dc.id!r} has no layers to score")
    return [
        score_layer(
            layer, hazards, config,
            at=at, scope_id=layer_scope_id(dc, layer),
            persistence=persistence, thresholds=thresholds,
        )
        for layer in dc.layers
    ]


def score_region(dcs: Sequence[ScoreCard]) -> ScoreCard:
    """Worst-datacenter rollup, tie-broken by datacenter scope id."""
    if not dcs:
        raise DomainError("score_region requires at least one datacenter card")
    regions = {card.scope_id.split("/", 1)[0] for card in dcs}
    if len(regions) != 1:
        raise DomainError(f"datacenter cards span multiple regions: {sorted(regions)}")
    worst = _argmax_card(list(dcs))
    return replace(worst, scope=Scope.REGION, scope_id=regions.pop())


def posture_and_movement(series: ScoreSeries, window: int) -> tuple[float, float]:
    """(exposure ceiling, movement) over the trailing window.

    Ceiling is the max persisted score; movement is last minus first
    (negative means improving).
    """
    if window < 2:
        raise DomainError(f"window must be >= 2, got {window}")
    if len(series.points) < window:
        raise DomainError(
            f"series {series.scope_id!r} has {len(series.points)} points, need >= {window}"
        )
    tail = series.points[-window:]
    ceiling = max(p.persisted for p in tail)
    movement = tail[-1].persisted - tail[0].persisted
    return ceiling, movement
