"""Adaptive trust of a service for a usage, and its 10-level discretization."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, OutOfRange, ZeroExpectation

LEVELS = 10
# absorbs float noise such as 10 * 0.7 == 7.000000000000001
_LEVEL_GUARD = 1e-9


@dataclass(frozen=True)
class TrustScore:
    value: float
    level: int

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise OutOfRange(f"trust value {self.value} outside [0, 1]")
        if self.level != trust_level(self.value):
            raise ValueError(f"level {self.level} inconsistent with value {self.value}")

    @classmethod
    def of(cls, value: float) -> "TrustScore":
        return cls(float(value), trust_level(value))


def adaptive_trust(f_s: Sequence[float], f_u: Sequence[float]) -> float:
    """Share of the usage's per-indicator expectations that the service meets.

    ``sum_n min(f_s[n], f_u[n]) / sum_n f_u[n]``; equals 1 exactly when the
    service dominates the expectation componentwise.
    """
    s = np.asarray(f_s, dtype=float)
    u = np.asarray(f_u, dtype=float)
    if s.shape != u.shape or s.ndim != 1:
        raise DimensionMismatch(f"service vector {s.shape} vs expectation vector {u.shape}")
    total = u.sum()
    if not total > 0:
        raise ZeroExpectation("expectation vector sums to zero")
    value = float(np.minimum(s, u).sum() / total)
    # min(s, u) <= u componentwise, so only rounding can push past 1
    return min(value, 1.0)


def trust_level(value: float) -> int:
    """Discretize a trust value in [0, 1] onto levels 1..10.

    Level ``l`` is the bin centred on the rating ``l`` (i.e. on ``l / 10``),
    so a value of 0.46 maps to 5 and 0.44 to 4; everything up to 0.15 maps to
    level 1.
    """
    if not isinstance(value, (int, float, np.floating)) or not 0.0 <= value <= 1.0:
        raise OutOfRange(f"trust value {value!r} outside [0, 1]")
    level = math.floor(LEVELS * value + 0.5 + _LEVEL_GUARD)
    return max(1, min(LEVELS, level))


def ceil_trust_level(value: float) -> int:
    """Upper-edge binning: level = max(1, ceil(10 * value)).

    Kept for comparison; rating-derived truth values sit exactly on these bin
    edges, so predictions scatter across two levels.
    """
    if not isinstance(value, (int, float, np.floating)) or not 0.0 <= value <= 1.0:
        raise OutOfRange(f"trust value {value!r} outside [0, 1]")
    return max(1, math.ceil(LEVELS * value - _LEVEL_GUARD))


def assess(pair, service, usage) -> TrustScore:
    """Trust of ``service`` for a single ``usage`` under a trained model pair."""
    from .models import predict_service_indicators, predict_usage_expectations

    f_s = predict_service_indicators(pair, service)
    f_u = predict_usage_expectations(pair, usage)
    return TrustScore.of(adaptive_trust(f_s.values, f_u.values))
