"""Trust for sessions in which one service is used for several purposes.

Per-usage expectation vectors are folded into a single expectation, either by
averaging or by a minimax "closeness" search: for each indicator, pick the
grid point ``p`` minimizing ``max_u d_u(p) - min_u d_u(p)`` with
``d_u(p) = w_u * |p - F_u(k)|``. Unweighted closeness uses ``w_u = 1``; the
weighted variant uses duration-derived significances.
"""
from __future__ import annotations

import datetime as _dt
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import IndicatorVector, ServiceProfile, UsagePattern, UsageProfile
from .errors import DimensionMismatch, EmptyHistory, EmptyInput, LengthMismatch, ZeroTotalDuration
from .trust import TrustScore, adaptive_trust

METHODS = ("avg", "closeness", "weighted")
HOUR_BUCKET_WIDTH = 6
_TIE = 1e-9


@dataclass(frozen=True)
class GridSpec:
    lo: float = 0.0
    hi: float = 1.0
    step: float = 0.01

    def __post_init__(self):
        if not (self.step > 0 and self.hi > self.lo):
            raise ValueError("grid needs lo < hi and a positive step")
        n = (self.hi - self.lo) / self.step
        if abs(n - round(n)) > 1e-9:
            raise ValueError("grid step must divide the interval")

    @property
    def size(self) -> int:
        return int(round((self.hi - self.lo) / self.step)) + 1

    def points(self) -> np.ndarray:
        # i * step avoids accumulated drift; rounding keeps 0.07 == 0.07
        decimals = max(0, int(np.ceil(-np.log10(self.step))) + 2)
        return np.round(self.lo + np.arange(self.size) * self.step, decimals)


DEFAULT_GRID = GridSpec()


@dataclass(frozen=True)
class AggregationResult:
    vector: IndicatorVector
    per_indicator_optimal_range: tuple[tuple[float, float], ...]
    fairness: float
    # minimal max-min distance spread per indicator; None for averaging
    spread: tuple[float, ...] | None = None


def _matrix(expectations) -> np.ndarray:
    if len(expectations) == 0:
        raise EmptyInput("no expectation vectors")
    rows = [np.asarray(getattr(e, "values", e), dtype=float) for e in expectations]
    if len({r.shape for r in rows}) != 1 or rows[0].ndim != 1:
        raise DimensionMismatch("expectation vectors differ in length")
    return np.stack(rows)


def fairness(agg, expectations) -> float:
    """min over usages of Euclidean distance to the aggregate, divided by the max."""
    m = _matrix(expectations)
    a = np.asarray(getattr(agg, "values", agg), dtype=float)
    if a.shape != m.shape[1:]:
        raise DimensionMismatch(f"aggregate has {a.shape}, expectations have {m.shape[1:]}")
    d = np.linalg.norm(m - a, axis=1)
    hi = d.max()
    return 1.0 if hi == 0 else float(d.min() / hi)


def aggregate_average(expectations) -> AggregationResult:
    m = _matrix(expectations)
    mean = m.mean(axis=0)
    vec = IndicatorVector(tuple(np.clip(mean, 0.0, 1.0)))
    return AggregationResult(vec, tuple((float(v), float(v)) for v in vec), fairness(vec, m))


def closeness_objective(points: np.ndarray, values: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(g(p) - h(p), g(p))`` for each candidate point."""
    d = weights[None, :] * np.abs(points[:, None] - values[None, :])
    g = d.max(axis=1)
    return g - d.min(axis=1), g


def _closeness_1d(values: np.ndarray, weights: np.ndarray, grid: GridSpec):
    points = grid.points()
    spread, g = closeness_objective(points, values, weights)
    # rounding strips float noise such as 0.30000000000000004 from the spread
    best = round(float(spread.min()), 12)
    optimal = np.flatnonzero(spread <= best + _TIE)
    lo, hi = int(optimal[0]), int(optimal[-1])
    if np.all(values == values[0]):
        return float(values[0]), (float(points[lo]), float(points[hi])), float(best)
    # among equally balanced points prefer the closest ones (smallest max
    # distance); values packed inside one grid cell otherwise make the whole
    # grid optimal and the midpoint meaningless
    closest = optimal[g[optimal] <= g[optimal].min() + _TIE]
    mid = (int(closest[0]) + int(closest[-1]) + 1) // 2  # round half up
    if mid not in closest:
        mid = int(closest[np.argmin(np.abs(closest - mid))])
    return float(points[mid]), (float(points[lo]), float(points[hi])), float(best)


def _closeness(m: np.ndarray, weights: np.ndarray, grid: GridSpec) -> AggregationResult:
    comps, ranges, spreads = [], [], []
    for k in range(m.shape[1]):
        v, r, s = _closeness_1d(m[:, k], weights, grid)
        comps.append(v)
        ranges.append(r)
        spreads.append(s)
    vec = IndicatorVector(tuple(comps))
    return AggregationResult(vec, tuple(ranges), fairness(vec, m), tuple(spreads))


def aggregate_closeness(expectations, grid: GridSpec = DEFAULT_GRID) -> AggregationResult:
    """Per-indicator exhaustive minimax search over the grid.

    The reported range is the full set of minimizers of ``g - h``. The
    returned component is the midpoint of the minimizers that are also
    closest (smallest ``g``); an indicator on which all expectations agree
    keeps that common value.
    """
    m = _matrix(expectations)
    return _closeness(m, np.ones(len(m)), grid)


def aggregate_closeness_weighted(expectations, significances: Sequence[float], grid: GridSpec = DEFAULT_GRID) -> AggregationResult:
    m = _matrix(expectations)
    w = np.asarray(significances, dtype=float)
    if w.shape != (len(m),):
        raise LengthMismatch(f"{len(w)} significances for {len(m)} expectation vectors")
    if np.any(w < 0):
        raise ValueError("significances must be non-negative")
    return _closeness(m, w, grid)


def usage_significance(durations: Sequence[float]) -> list[float]:
    """Each usage's share of the pattern's total average duration."""
    d = np.asarray(durations, dtype=float)
    if d.size == 0:
        raise EmptyInput("no durations")
    if np.any(d < 0):
        raise ValueError("durations must be >= 0")
    total = d.sum()
    if not total > 0:
        raise ZeroTotalDuration("durations sum to zero")
    return [float(x) for x in d / total]


def aggregate(expectations, method: str, significances: Sequence[float] | None = None, grid: GridSpec = DEFAULT_GRID) -> AggregationResult:
    if method == "avg":
        return aggregate_average(expectations)
    if method == "closeness":
        return aggregate_closeness(expectations, grid)
    if method == "weighted":
        if significances is None:
            raise ValueError("weighted aggregation needs significances")
        return aggregate_closeness_weighted(expectations, significances, grid)
    raise ValueError(f"unknown aggregation method {method!r}; expected one of {METHODS}")


def hour_bucket(timestamp, width: int = HOUR_BUCKET_WIDTH) -> int:
    """Hour-of-day bucket (UTC for numeric POSIX timestamps)."""
    if isinstance(timestamp, _dt.datetime):
        hour = timestamp.hour
    else:
        hour = _dt.datetime.fromtimestamp(float(timestamp), tz=_dt.timezone.utc).hour
    return hour // width


def predict_usage_pattern(
    history: Sequence[tuple[object, str]],
    context: tuple[int | None, str | None],
    n: int = 3,
) -> UsagePattern:
    """Top-``n`` usages for the next session given (hour bucket, last usage).

    Usages are ranked by how often they occurred in the same context, then by
    overall frequency (the back-off for contexts never seen), then by id.
    """
    if not history:
        raise EmptyHistory("usage history is empty")
    if n < 1:
        raise ValueError("n must be positive")
    events = sorted(history, key=lambda e: e[0])
    bucket, last = context
    overall = Counter(u for _, u in events)
    conditional: Counter = Counter()
    for i, (ts, uid) in enumerate(events):
        prev = events[i - 1][1] if i > 0 else None
        if last is not None and prev != last:
            continue
        if bucket is not None and hour_bucket(ts) != bucket:
            continue
        conditional[uid] += 1
    ranked = sorted(overall, key=lambda u: (-conditional[u], -overall[u], u))
    return UsagePattern(tuple(ranked[:n]))


def aggregate_trust(f_s, expectations, method: str, significances: Sequence[float] | None = None) -> TrustScore:
    """Adaptive trust of ``f_s`` against the aggregate of ``expectations``."""
    agg = aggregate(expectations, method, significances)
    return TrustScore.of(adaptive_trust(getattr(f_s, "values", f_s), agg.vector.values))


def multi_use_trust(
    pair,
    service: ServiceProfile,
    pattern: UsagePattern,
    method: str,
    profiles: Mapping[str, UsageProfile],
) -> TrustScore:
    """Trust of ``service`` for a whole usage pattern.

    For the weighted method, significances come from the pattern when it
    carries them, otherwise from the profiles' average durations.
    """
    from .models import predict_service_indicators, predict_usage_expectations

    if method not in METHODS:
        raise ValueError(f"unknown aggregation method {method!r}; expected one of {METHODS}")
    usages = [profiles[u] for u in pattern.usages]
    expectations = [predict_usage_expectations(pair, u) for u in usages]
    significances = None
    if method == "weighted":
        significances = pattern.significances or usage_significance([u.avg_duration_minutes for u in usages])
    f_s = predict_service_indicators(pair, service)
    return aggregate_trust(f_s, expectations, method, significances)
