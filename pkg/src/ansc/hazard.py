"""Failure-probability estimation and layer-level capacity-loss aggregation.

Per-element outage rates come from incident counts over an exposure window,
floored so new elements are never scored as immortal, and weighted up for
recently maintained elements.  Layer aggregation uses a marginal-preserving
beta-factor common-cause model: with probability ``q_cc = beta * min_i(p_i)``
every element fails together; otherwise elements fail independently with
rescaled probabilities.  The independent branch is an exact discrete
convolution over integer capacity units.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import (
    check_capacity_units,
    check_positive,
    check_probabilities,
    check_probability,
)
from .errors import DomainError

# Mass below this is dropped from loss supports; sums are renormalized only
# when the accumulated drift exceeds SUM_DRIFT.
PRUNE_EPS = 1e-15
SUM_DRIFT = 1e-9

DEFAULT_BETA = 0.15


@dataclass(frozen=True)
class IncidentRecord:
    """One historical outage for an element; duration is kept for the
    simulator's event timeline but does not weight the rate estimate."""

    element_id: str
    start: datetime
    end: datetime
    cause: str = ""

    def __post_init__(self) -> None:
        if not self.element_id:
            raise DomainError("incident element_id must be non-empty")
        if self.end < self.start:
            raise DomainError(
                f"incident for {self.element_id!r} ends before it starts "
                f"({self.end.isoformat()} < {self.start.isoformat()})"
            )


@dataclass(frozen=True)
class ConditionWeights:
    """Operational-condition weighting applied to raw outage rates."""

    maintenance_multiplier: float = 2.0
    maintenance_window_days: int = 14
    min_rate_per_year: float = 1e-4

    def __post_init__(self) -> None:
        if self.maintenance_multiplier < 1.0:
            raise DomainError(f"maintenance_multiplier must be >= 1, got {self.maintenance_multiplier}")
        if self.maintenance_window_days < 0:
            raise DomainError(f"maintenance_window_days must be >= 0, got {self.maintenance_window_days}")
        check_positive(self.min_rate_per_year, "min_rate_per_year")


@dataclass(frozen=True)
class ElementHazard:
    element_id: str
    rate_per_year: float
    p_fail_horizon: float

    def __post_init__(self) -> None:
        if self.rate_per_year < 0:
            raise DomainError(f"rate_per_year must be >= 0, got {self.rate_per_year}")
        check_probability(self.p_fail_horizon, "p_fail_horizon")


@dataclass(frozen=True)
class LossDistribution:
    """Discrete distribution of capacity units lost in a layer within the horizon."""

    support: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", tuple(int(s) for s in self.support))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.support) != len(self.probs):
            raise DomainError("support and probs must have equal length")
        if not self.support:
            raise DomainError("loss distribution must have non-empty support")
        prev = -1
        for s in self.support:
            if s < 0:
                raise DomainError(f"loss support must be >= 0, got {s}")
            if s <= prev:
                raise DomainError("loss support must be strictly ascending")
            prev = s
        for p in self.probs:
            if p < 0:
                raise DomainError(f"loss probabilities must be >= 0, got {p}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > SUM_DRIFT:
            raise DomainError(f"loss probabilities must sum to 1 +- {SUM_DRIFT}, got {total!r}")

    def tail_above(self, threshold: float) -> float:
        """P(loss > threshold)."""
        return math.fsum(p for s, p in zip(self.support, self.probs) if s > threshold)

    def mean(self) -> float:
        return math.fsum(s * p for s, p in zip(self.support, self.probs))


def estimate_failure_prob(
    history: Iterable[IncidentRecord],
    element_id: str,
    exposure_years: float,
    horizon_years: float,
    weights: ConditionWeights = ConditionWeights(),
    recently_maintained: bool = False,
) -> ElementHazard:
    """Estimate an element's failure probability over the horizon.

    rate = max(incident_count / exposure_years, min_rate_per_year), scaled by
    the maintenance multiplier when the element was recently maintained, then
    converted by exponential survival: p = 1 - exp(-rate * weight * horizon).
    """
    exposure_years = check_positive(exposure_years, "exposure_years")
    horizon_years = check_positive(horizon_years, "horizon_years")
    k = sum(1 for record in history if record.element_id == element_id)
    rate = max(k / exposure_years, weights.min_rate_per_year)
    weight = weights.maintenance_multiplier if recently_maintained else 1.0
    p_fail = -math.expm1(-rate * weight * horizon_years)
    return ElementHazard(element_id=element_id, rate_per_year=rate, p_fail_horizon=p_fail)


def split_common_cause(p: Sequence[float], beta: float) -> tuple[float, list[float]]:
    """Split marginal failure probabilities into a common-cause share and
    rescaled independent probabilities.

    q_cc = beta * min_i(p_i) and p_ind_i = (p_i - q_cc) / (1 - q_cc), which
    preserves every marginal exactly: q_cc + (1 - q_cc) * p_ind_i = p_i.
    """
    probs = check_probabilities(p, "p")
    beta = check_probability(beta, "beta")
    return _split_raw(probs, beta)


def _split_raw(probs: Sequence[float], beta: float) -> tuple[float, list[float]]:
    q_cc = beta * min(probs)
    if q_cc >= 1.0:
        return 1.0, [0.0] * len(probs)
    p_ind = [(pi - q_cc) / (1.0 - q_cc) for pi in probs]
    return q_cc, p_ind


def loss_pmf_dense(caps: Sequence[int], probs: Sequence[float], beta: float) -> np.ndarray:
    """Mixture pmf over the full capacity grid 0..sum(caps), unpruned.

    Shared by :func:`layer_loss_distribution` and the simulator's fast path
    so both compute bit-identical distributions.
    """
    q_cc, p_ind = _split_raw([float(p) for p in probs], beta)
    caps = [int(c) for c in caps]
    total = sum(caps)
    pmf = np.zeros(total + 1, dtype=np.float64)
    pmf[0] = 1.0
    for cap, p in zip(caps, p_ind):
        if p == 0.0:
            continue
        nxt = pmf * (1.0 - p)
        nxt[cap:] += pmf[: total + 1 - cap] * p
        pmf = nxt
    pmf *= 1.0 - q_cc
    pmf[total] += q_cc
    return pmf


def layer_loss_distribution(
    elements: Sequence[tuple[int, float]], beta: float = DEFAULT_BETA
) -> LossDistribution:
    """Exact loss distribution for a layer of (capacity, p_fail) elements.

    Two-branch mixture: with probability q_cc all elements fail at once
    (loss = installed capacity); with probability 1 - q_cc the rescaled
    independent probabilities drive a dynamic-programming convolution over
    the integer capacity grid, O(N * C_total).
    """
    if not elements:
        raise DomainError("layer must contain at least one element")
    caps = [check_capacity_units(c, f"elements[{i}] capacity") for i, (c, _) in enumerate(elements)]
    for i, c in enumerate(caps):
        if c == 0:
            raise DomainError(f"elements[{i}] capacity must be positive")
    probs = check_probabilities([p for _, p in elements], "p_fail")

    pmf = loss_pmf_dense(caps, probs, beta)
    keep = np.flatnonzero(pmf >= PRUNE_EPS)
    support = tuple(int(i) for i in keep)
    kept = pmf[keep]
    drift = abs(float(kept.sum()) - 1.0)
    if drift > SUM_DRIFT:
        kept = kept / kept.sum()
    return LossDistribution(support=support, probs=tuple(float(x) for x in kept))


def violation_probability(loss: LossDistribution, c_avail: int, c_req: int) -> float:
    """P(additional loss pushes available capacity below demand).

    Returns P(loss > c_avail - c_req); 1.0 when demand already exceeds
    available capacity.
    """
    c_avail = check_capacity_units(c_avail, "c_avail")
    c_req = check_capacity_units(c_req, "c_req")
    if c_avail < c_req:
        return 1.0
    tail = loss.tail_above(c_avail - c_req)
    return min(1.0, max(0.0, tail))


def _latest_end_by_element(history: Iterable[IncidentRecord]) -> dict[str, datetime]:
    latest: dict[str, datetime] = {}
    for record in history:
        if record.element_id not in latest or record.end > latest[record.element_id]:
            latest[record.element_id] = record.end
    return latest


class HazardRateEstimator(BaseEstimator):
    """Sklearn-style wrapper over the rate estimator.

    ``fit`` counts incidents per element over an exposure window and records
    the latest repair time; ``predict_proba`` converts the learned rates
    into horizon failure probabilities, applying the maintenance multiplier
    to elements repaired within ``maintenance_window_days`` of the scoring
    time (a repair is a maintenance touch).
    """

    def __init__(
        self,
        horizon_years: float = 0.25,
        min_rate_per_year: float = 1e-4,
        maintenance_multiplier: float = 2.0,
        maintenance_window_days: int = 14,
    ) -> None:
        self.horizon_years = horizon_years
        self.min_rate_per_year = min_rate_per_year
        self.maintenance_multiplier = maintenance_multiplier
        self.maintenance_window_days = maintenance_window_days

    def _weights(self) -> ConditionWeights:
        return ConditionWeights(
            maintenance_multiplier=self.maintenance_multiplier,
            maintenance_window_days=self.maintenance_window_days,
            min_rate_per_year=self.min_rate_per_year,
        )

    def fit(
        self,
        X: Iterable[IncidentRecord],
        y: object = None,
        *,
        exposure_years: float = 2.0,
    ) -> "HazardRateEstimator":
        check_positive(self.horizon_years, "horizon_years")
        weights = self._weights()  # validates the weighting params
        incidents = list(X)
        self.exposure_years_ = check_positive(exposure_years, "exposure_years")
        self.incident_counts_ = Counter(record.element_id for record in incidents)
        self.latest_end_ = _latest_end_by_element(incidents)
        self.weights_ = weights
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "incident_counts_"):
            raise NotFittedError("HazardRateEstimator must be fitted before prediction")

    def recently_maintained(self, element_id: str, at: datetime) -> bool:
        self._check_fitted()
        last = self.latest_end_.get(element_id)
        if last is None:
            return False
        return timedelta(0) <= at - last <= timedelta(days=self.maintenance_window_days)

    def hazard(self, element_id: str, at: datetime) -> ElementHazard:
        """Hazard for one element at scoring time ``at``."""
        self._check_fitted()
        k = self.incident_counts_.get(element_id, 0)
        rate = max(k / self.exposure_years_, self.min_rate_per_year)
        weight = self.maintenance_multiplier if self.recently_maintained(element_id, at) else 1.0
        p_fail = -math.expm1(-rate * weight * self.horizon_years)
        return ElementHazard(element_id=element_id, rate_per_year=rate, p_fail_horizon=p_fail)

    def hazards_for(self, element_ids: Iterable[str], at: datetime) -> dict[str, ElementHazard]:
        return {eid: self.hazard(eid, at) for eid in element_ids}

    def predict_proba(self, X: Iterable[str], *, at: datetime) -> np.ndarray:
        """Failure probabilities over the horizon for the given element ids."""
        return np.array([self.hazard(eid, at).p_fail_horizon for eid in X], dtype=np.float64)
