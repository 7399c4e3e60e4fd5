"""Input validation helpers used by the public estimator and function surfaces.

All helpers raise :class:`~ansc.errors.DomainError` (a ``ValueError``) so they
compose with code that only catches standard exceptions.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .errors import DomainError


def check_probability(value: float, name: str = "p") -> float:
    value = float(value)
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must be in [0, 1], got {value!r}")
    return value


def check_probabilities(values: Iterable[float], name: str = "p") -> list[float]:
    out = [check_probability(v, f"{name}[{i}]") for i, v in enumerate(values)]
    if not out:
        raise DomainError(f"{name} must be non-empty")
    return out


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or value <= 0.0:
        raise DomainError(f"{name} must be > 0, got {value!r}")
    return value


def check_non_negative(value: float, name: str) -> float:
    value = float(value)
    if math.isnan(value) or value < 0.0:
        raise DomainError(f"{name} must be >= 0, got {value!r}")
    return value


def check_capacity_units(value: object, name: str) -> int:
    """Capacity is integral (1 unit = 1 Gbps); fractional amounts are rejected."""
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            raise DomainError(f"{name} must be an integer unit count, got float {value!r}")
        raise DomainError(f"{name} must be an integer unit count, got {value!r}")
    if value < 0:
        raise DomainError(f"{name} must be >= 0, got {value}")
    return value


def check_fraction_pair(lo: float, hi: float, name: str) -> tuple[float, float]:
    lo, hi = float(lo), float(hi)
    if not (0.0 <= lo <= hi):
        raise DomainError(f"{name} must be a non-empty range with 0 <= lo <= hi, got ({lo}, {hi})")
    return lo, hi


def check_int_range(lo: int, hi: int, name: str, minimum: int = 1) -> tuple[int, int]:
    if not (isinstance(lo, int) and isinstance(hi, int)):
        raise DomainError(f"{name} bounds must be integers, got ({lo!r}, {hi!r})")
    if lo < minimum or hi < lo:
        raise DomainError(f"{name} must satisfy {minimum} <= lo <= hi, got ({lo}, {hi})")
    return lo, hi


def column_or_1d(values: Sequence[float], name: str = "X") -> list[float]:
    """Flatten sklearn-style column input (n,) or (n, 1) into a plain list."""
    out: list[float] = []
    for v in values:
        if isinstance(v, (list, tuple)):
            if len(v) != 1:
                raise DomainError(f"{name} must be 1-dimensional or a single column")
            v = v[0]
        elif hasattr(v, "__len__") and not isinstance(v, str):
            seq = list(v)
            if len(seq) != 1:
                raise DomainError(f"{name} must be 1-dimensional or a single column")
            v = seq[0]
        out.append(float(v))
    return out
