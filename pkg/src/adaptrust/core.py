"""Domain types, rating normalization and dataset validation."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, OutOfRange

RATING_MIN = 1
RATING_MAX = 10

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class AttributeSpec:
    """Declaration of one service attribute.

    Categorical attributes carry an ordered ``categories`` tuple; numeric ones
    carry ``bounds=(lo, hi)``.
    """

    name: str
    kind: str
    categories: tuple[str, ...] = ()
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("attribute name must be non-empty")
        if self.kind == CATEGORICAL:
            if not self.categories:
                raise ValueError(f"categorical attribute {self.name!r} needs categories")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"duplicate categories for {self.name!r}")
        elif self.kind == NUMERIC:
            if self.bounds is None or not self.bounds[0] < self.bounds[1]:
                raise ValueError(f"numeric attribute {self.name!r} needs bounds lo < hi")
        else:
            raise ValueError(f"unknown attribute kind {self.kind!r}")

    @property
    def width(self) -> int:
        return len(self.categories) if self.kind == CATEGORICAL else 1

    def admits(self, value) -> bool:
        if self.kind == CATEGORICAL:
            return isinstance(value, str) and value in self.categories
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        lo, hi = self.bounds
        return lo <= value <= hi


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute declarations fixing the service model's input layout."""

    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self):
        if not self.attributes:
            raise EmptyInput("attribute schema must declare at least one attribute")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")

    @property
    def width(self) -> int:
        return sum(a.width for a in self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def get(self, name: str) -> AttributeSpec | None:
        for spec in self.attributes:
            if spec.name == name:
                return spec
        return None


@dataclass(frozen=True)
class ServiceProfile:
    id: str
    attributes: Mapping[str, object]
    owner: str = ""
    device: str = ""
    functions: tuple[str, ...] = ()
    qos: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class UsageProfile:
    id: str
    metadata: frozenset[str]
    avg_duration_minutes: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "metadata", frozenset(self.metadata))


@dataclass(frozen=True)
class RatingRecord:
    service_id: str
    usage_id: str
    rating: int


@dataclass(frozen=True)
class Session:
    """One multi-use consumption: a service rated once for a whole usage pattern."""

    service_id: str
    usages: tuple[str, ...]
    rating: int


@dataclass(frozen=True)
class IndicatorVector:
    """Per-indicator trust values, each in [0, 1]."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        for v in vals:
            if not (0.0 <= v <= 1.0):
                raise OutOfRange(f"indicator value {v} outside [0, 1]")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class UsagePattern:
    usages: tuple[str, ...]
    significances: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "usages", tuple(self.usages))
        if not self.usages:
            raise EmptyInput("a usage pattern needs at least one usage")
        if self.significances is not None:
            sig = tuple(float(s) for s in self.significances)
            if len(sig) != len(self.usages):
                raise DimensionMismatch("significances must match usages in length")
            if any(s < 0 for s in sig) or abs(sum(sig) - 1.0) > 1e-9:
                raise OutOfRange("significances must be >= 0 and sum to 1")
            object.__setattr__(self, "significances", sig)


def normalize_rating(r: int) -> float:
    """Map a 1..10 rating onto the unit trust scale."""
    if isinstance(r, bool) or int(r) != r or not RATING_MIN <= r <= RATING_MAX:
        raise OutOfRange(f"rating {r!r} outside {RATING_MIN}..{RATING_MAX}")
    return int(r) / 10


@dataclass(frozen=True)
class Finding:
    kind: str  # OutOfRange | DanglingReference | DuplicatePair | DuplicateId | SchemaViolation
    message: str
    location: str = ""

    def __str__(self) -> str:
        return f"{self.kind} at {self.location}: {self.message}" if self.location else f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.findings)

    def __len__(self) -> int:
        return len(self.findings)

    def kinds(self) -> Counter:
        return Counter(f.kind for f in self.findings)

    def __str__(self) -> str:
        return "; ".join(str(f) for f in self.findings) or "ok"


def validate_dataset(
    services: Sequence[ServiceProfile],
    usages: Sequence[UsageProfile],
    ratings: Sequence[RatingRecord],
    schema: AttributeSchema | None = None,
    sessions: Sequence[Session] = (),
    allow_duplicates: bool = True,
) -> ValidationReport:
    """Collect every structural problem in a dataset.

    Repeated ratings of one (service, usage) pair are legal unless
    ``allow_duplicates`` is False.
    """
    findings: list[Finding] = []

    service_ids = Counter(s.id for s in services)
    usage_ids = Counter(u.id for u in usages)
    for sid, n in service_ids.items():
        if not sid:
            findings.append(Finding("SchemaViolation", "empty service id", "services"))
        if n > 1:
            findings.append(Finding("DuplicateId", f"service id {sid!r} appears {n} times", "services"))
    for uid, n in usage_ids.items():
        if not uid:
            findings.append(Finding("SchemaViolation", "empty usage id", "usages"))
        if n > 1:
            findings.append(Finding("DuplicateId", f"usage id {uid!r} appears {n} times", "usages"))

    for u in usages:
        dur = u.avg_duration_minutes
        if not isinstance(dur, (int, float)) or not math.isfinite(dur) or dur < 0:
            findings.append(Finding("OutOfRange", f"avg_duration_minutes {dur!r} must be >= 0", f"usage {u.id}"))

    for s in services:
        loc = f"service {s.id}"
        if not s.attributes:
            findings.append(Finding("SchemaViolation", "no attributes", loc))
        if schema is None:
            continue
        for name, value in s.attributes.items():
            spec = schema.get(name)
            if spec is None:
                findings.append(Finding("SchemaViolation", f"undeclared attribute {name!r}", loc))
            elif not spec.admits(value):
                findings.append(Finding("SchemaViolation", f"{name}={value!r} not admitted by schema", loc))
        for name in schema.names:
            if name not in s.attributes:
                findings.append(Finding("SchemaViolation", f"missing attribute {name!r}", loc))

    def _check_rating(r, loc):
        if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or not RATING_MIN <= r <= RATING_MAX:
            findings.append(Finding("OutOfRange", f"rating {r!r} outside {RATING_MIN}..{RATING_MAX}", loc))

    seen: Counter = Counter()
    for i, rec in enumerate(ratings):
        loc = f"rating #{i}"
        if rec.service_id not in service_ids:
            findings.append(Finding("DanglingReference", f"unknown service id {rec.service_id!r}", loc))
        if rec.usage_id not in usage_ids:
            findings.append(Finding("DanglingReference", f"unknown usage id {rec.usage_id!r}", loc))
        _check_rating(rec.rating, loc)
        seen[(rec.service_id, rec.usage_id)] += 1
    if not allow_duplicates:
        for (sid, uid), n in seen.items():
            if n > 1:
                findings.append(Finding("DuplicatePair", f"({sid}, {uid}) rated {n} times", "ratings"))

    for i, sess in enumerate(sessions):
        loc = f"session #{i}"
        if sess.service_id not in service_ids:
            findings.append(Finding("DanglingReference", f"unknown service id {sess.service_id!r}", loc))
        if not sess.usages:
            findings.append(Finding("SchemaViolation", "empty usage pattern", loc))
        for uid in sess.usages:
            if uid not in usage_ids:
                findings.append(Finding("DanglingReference", f"unknown usage id {uid!r}", loc))
        _check_rating(sess.rating, loc)

    return ValidationReport(tuple(findings))


@dataclass(frozen=True)
class Dataset:
    """A validated bundle of services, usages, single-use ratings and sessions."""

    schema: AttributeSchema
    services: tuple[ServiceProfile, ...]
    usages: tuple[UsageProfile, ...]
    ratings: tuple[RatingRecord, ...]
    sessions: tuple[Session, ...] = ()

    def __post_init__(self):
        for name in ("services", "usages", "ratings", "sessions"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def validate(self, allow_duplicates: bool = True) -> ValidationReport:
        return validate_dataset(
            self.services, self.usages, self.ratings, self.schema, self.sessions, allow_duplicates
        )

    def service(self, service_id: str) -> ServiceProfile:
        return self._service_index()[service_id]

    def usage(self, usage_id: str) -> UsageProfile:
        return self._usage_index()[usage_id]

    def _service_index(self) -> dict[str, ServiceProfile]:
        idx = self.__dict__.get("_sidx")
        if idx is None:
            idx = {s.id: s for s in self.services}
            object.__setattr__(self, "_sidx", idx)
        return idx

    def _usage_index(self) -> dict[str, UsageProfile]:
        idx = self.__dict__.get("_uidx")
        if idx is None:
            idx = {u.id: u for u in self.usages}
            object.__setattr__(self, "_uidx", idx)
        return idx

    def with_ratings(self, ratings: Iterable[RatingRecord]) -> "Dataset":
        return Dataset(self.schema, self.services, self.usages, tuple(ratings), self.sessions)
