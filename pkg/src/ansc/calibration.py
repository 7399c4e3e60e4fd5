"""Fleet-wide normalization: color thresholds under annual assignment budgets.

The caps (red 5%, orange 12%, amber 20% by default) are independent
per-category ceilings, not quotas: a healthy fleet flags nothing because
thresholds never drop below ``score_floor``.  Calibration is rank-based --
sort scores descending (ties broken by scope id ascending) and cut at the
slot counts -- so the flagged sets are deterministic and exact even with
duplicate scores.  ``audit`` checks annual assignment fractions against
cap + tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_non_negative, check_positive, check_probability
from .errors import ConfigurationError, DomainError
from .scoring import Color, Scope, map_color

# Caps are entered as decimal fractions; reconstruct the intended rational so
# ceil(cap * n) is exact (0.05 * 100 must cut at 5 slots, not 6).
_CAP_DENOMINATOR_LIMIT = 10**6


@dataclass(frozen=True)
class BudgetConfig:
    """Annual color budgets plus the scoring knobs they normalize."""

    red_frac: float = 0.05
    orange_frac: float = 0.12
    amber_frac: float = 0.20
    tolerance: float = 0.05
    score_floor: float = 0.05
    t_pers: float = 0.10
    horizon_years: float = 0.25
    beta: float = 0.15
    kappa: float = 0.5

    def __post_init__(self) -> None:
        for name in ("red_frac", "orange_frac", "amber_frac"):
            check_probability(getattr(self, name), name)
        check_non_negative(self.tolerance, "tolerance")
        check_probability(self.score_floor, "score_floor")
        if not 0.0 < self.t_pers <= 1.0:
            raise ConfigurationError(f"t_pers must be in (0, 1], got {self.t_pers}")
        check_positive(self.horizon_years, "horizon_years")
        check_probability(self.beta, "beta")
        check_non_negative(self.kappa, "kappa")

    def cap(self, color: Color) -> float:
        return {Color.RED: self.red_frac, Color.ORANGE: self.orange_frac, Color.AMBER: self.amber_frac}[color]


@dataclass(frozen=True)
class Thresholds:
    t_red: float
    t_orange: float
    t_amber: float
    calibrated_at: datetime
    population: Scope

    def __post_init__(self) -> None:
        object.__setattr__(self, "population", Scope(self.population))
        if self.population is Scope.LAYER:
            raise ConfigurationError("thresholds are calibrated per datacenter or per region")
        if not 0.0 <= self.t_amber <= self.t_orange <= self.t_red <= 1.0:
            raise ConfigurationError(
                "thresholds must satisfy 0 <= t_amber <= t_orange <= t_red <= 1, "
                f"got ({self.t_red}, {self.t_orange}, {self.t_amber})"
            )


def _exact_slot_count(frac: float, n: int) -> int:
    """ceil(frac * n) on the intended rational value of ``frac``."""
    return math.ceil(Fraction(frac).limit_denominator(_CAP_DENOMINATOR_LIMIT) * n)


def color_slots(n: int, budget: BudgetConfig) -> tuple[int, int, int]:
    """Maximum flaggable sites per color for a population of size n."""
    if n < 1:
        raise DomainError(f"population size must be >= 1, got {n}")
    return (
        _exact_slot_count(budget.red_frac, n),
        _exact_slot_count(budget.orange_frac, n),
        _exact_slot_count(budget.amber_frac, n),
    )


def _ranked(scores: Sequence[tuple[str, float]]) -> list[tuple[str, float]]:
    for sid, score in scores:
        check_probability(score, f"score[{sid!r}]")
    return sorted(scores, key=lambda item: (-item[1], item[0]))


def calibrate_and_assign(
    scores: Sequence[tuple[str, float]],
    budget: BudgetConfig,
    *,
    population: Scope = Scope.DATACENTER,
    at: datetime,
) -> tuple[Thresholds, dict[str, Color]]:
    """Calibrate thresholds and produce the rank-based color assignment.

    Thresholds are the scores at the cumulative slot cuts, floored at
    ``score_floor``.  A site is flagged only if it is inside a slot window
    AND at or above that window's threshold, so caps hold exactly under ties
    and nothing is flagged when the whole population scores below the floor.
    """
    if not scores:
        raise DomainError("cannot calibrate on an empty score population")
    ranked = _ranked(scores)
    n = len(ranked)
    k_red, k_orange, k_amber = color_slots(n, budget)
    cut_red = min(k_red, n)
    cut_orange = min(k_red + k_orange, n)
    cut_amber = min(k_red + k_orange + k_amber, n)

    def threshold_at(cut: int) -> float:
        if cut == 0:
            return 1.0
        return max(ranked[cut - 1][1], budget.score_floor)

    t_red = threshold_at(cut_red)
    t_orange = min(t_red, threshold_at(cut_orange))
    t_amber = min(t_orange, threshold_at(cut_amber))
    thresholds = Thresholds(
        t_red=t_red, t_orange=t_orange, t_amber=t_amber,
        calibrated_at=at, population=population,
    )

    assignment: dict[str, Color] = {}
    for rank, (sid, score) in enumerate(ranked, start=1):
        if rank <= cut_red and score >= t_red:
            assignment[sid] = Color.RED
        elif rank <= cut_orange and score >= t_orange:
            assignment[sid] = Color.ORANGE
        elif rank <= cut_amber and score >= t_amber:
            assignment[sid] = Color.AMBER
        else:
            assignment[sid] = Color.GREEN
    return thresholds, assignment


def calibrate(
    scores: Sequence[tuple[str, float]],
    budget: BudgetConfig,
    *,
    population: Scope = Scope.DATACENTER,
    at: datetime,
) -> Thresholds:
    thresholds, _ = calibrate_and_assign(scores, budget, population=population, at=at)
    return thresholds


def assign_colors(
    scores: Sequence[tuple[str, float]], budget: BudgetConfig
) -> dict[str, Color]:
    """Rank-based color assignment respecting every per-color cap exactly."""
    _, assignment = calibrate_and_assign(
        scores, budget, population=Scope.DATACENTER, at=datetime.min
    )
    return assignment


@dataclass(frozen=True)
class ColorBudgetAudit:
    color: Color
    scope_days: int
    fraction: float
    cap: float
    limit: float
    compliant: bool


@dataclass(frozen=True)
class AuditReport:
    total_scope_days: int
    results: tuple[ColorBudgetAudit, ...]
    compliant: bool


def audit(
    assignments: Iterable[tuple[str, date, Color]], budget: BudgetConfig
) -> AuditReport:
    """Fraction of scope-days per flagged color vs cap + tolerance."""
    totals: dict[Color, int] = {Color.RED: 0, Color.ORANGE: 0, Color.AMBER: 0}
    total = 0
    for _, _, color in assignments:
        color = Color(color)
        total += 1
        if color in totals:
            totals[color] += 1
    results = []
    for color, days in totals.items():
        fraction = days / total if total else 0.0
        cap = budget.cap(color)
        limit = cap + budget.tolerance
        results.append(
            ColorBudgetAudit(
                color=color, scope_days=days, fraction=fraction,
                cap=cap, limit=limit, compliant=fraction <= limit,
            )
        )
    return AuditReport(
        total_scope_days=total,
        results=tuple(results),
        compliant=all(r.compliant for r in results),
    )


class ColorCalibrator(BaseEstimator):
    """Sklearn-style facade over the calibration procedure.

    ``fit`` learns thresholds (and the exact rank-based assignment) from a
    population of persisted scores; ``predict`` maps scores to color labels
    against the learned thresholds.
    """

    def __init__(
        self,
        red_frac: float = 0.05,
        orange_frac: float = 0.12,
        amber_frac: float = 0.20,
        score_floor: float = 0.05,
        population: str = "datacenter",
    ) -> None:
        self.red_frac = red_frac
        self.orange_frac = orange_frac
        self.amber_frac = amber_frac
        self.score_floor = score_floor
        self.population = population

    def _budget(self) -> BudgetConfig:
        return BudgetConfig(
            red_frac=self.red_frac,
            orange_frac=self.orange_frac,
            amber_frac=self.amber_frac,
            score_floor=self.score_floor,
        )

    def fit(
        self,
        X: Sequence[float],
        y: object = None,
        *,
        ids: Sequence[str] | None = None,
        at: datetime | None = None,
    ) -> "ColorCalibrator":
        values = [check_probability(float(v), f"X[{i}]") for i, v in enumerate(np.ravel(X))]
        if ids is None:
            ids = [f"{i:06d}" for i in range(len(values))]
        if len(ids) != len(values):
            raise DomainError(f"ids and X length mismatch: {len(ids)} != {len(values)}")
        when = at if at is not None else datetime.min
        thresholds, assignment = calibrate_and_assign(
            list(zip(ids, values)), self._budget(),
            population=Scope(self.population), at=when,
        )
        self.thresholds_ = thresholds
        self.assignment_ = assignment
        self.n_samples_ = len(values)
        return self

    def predict(self, X: Sequence[float]) -> np.ndarray:
        if not hasattr(self, "thresholds_"):
            raise NotFittedError("ColorCalibrator must be fitted before prediction")
        return np.array(
            [map_color(float(v), self.thresholds_).value for v in np.ravel(X)], dtype=object
        )

    def fit_predict(self, X: Sequence[float], y: object = None, **fit_params: object) -> np.ndarray:
        self.fit(X, y, **fit_params)  # type: ignore[arg-type]
        return self.predict(X)
