"""Seeded synthetic marketplace with known indicator structure.

Usages are split round-robin into ``indicator_count`` blocks. Every usage in
block ``k`` shares that block's expectation vector: high (>= 0.7) on
indicator ``k`` and low elsewhere, the lows summing to at most 0.3. Service
indicator vectors are drawn uniformly on the 0.01 grid, and (when ``separable``) redrawn until
the noise-free ratings of different blocks differ by at least two points on
that service, so every service's ratings split cleanly along blocks.

Ratings are ``clamp(round_half_up(10 * (T + noise)), 1, 10)`` where ``T`` is
the adaptive trust of the service for the usage.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import (
    CATEGORICAL,
    NUMERIC,
    AttributeSchema,
    AttributeSpec,
    Dataset,
    RatingRecord,
    ServiceProfile,
    Session,
    UsageProfile,
)
from ..errors import ConfigInvalid

# one numeric attribute carries each indicator
INDICATOR_ATTRIBUTES = (
    "link_quality",
    "owner_reputation",
    "encryption_strength",
    "carrier_reputation",
    "uptime_score",
    "battery_health",
    "signal_stability",
    "latency_score",
)
# one metadata word marks each block
BLOCK_WORDS = ("streaming", "finance", "social", "gaming", "voice", "navigation", "shopping", "news")
APP_NAMES = (
    "youtube", "netflix", "banking", "paypal", "twitter", "instagram", "steam", "chess",
    "skype", "whatsapp", "maps", "uber", "amazon", "ebay", "bbc", "reuters", "spotify",
    "twitch", "venmo", "reddit", "fortnite", "zoom", "waze", "etsy", "cnn",
)
FILLER_WORDS = ("background", "interactive", "mobile")
DISTRACTORS = (
    AttributeSpec("device_brand", CATEGORICAL, ("acme", "globex", "initech")),
    AttributeSpec("device_os", CATEGORICAL, ("android", "ios", "linux")),
)
NUMERIC_BOUNDS = (0.0, 10.0)
# separable sampling can only place at most five blocks two points apart on 1..10
MAX_SEPARABLE_INDICATORS = 5
_BATCH = 4096
_MAX_DRAWS = 5_000_000


@dataclass(frozen=True)
class GeneratorConfig:
    indicator_count: int = 2
    num_services: int = 200
    num_usages: int = 12
    noise_std: float = 0.0
    seed: int = 42
    distractor_attributes: int = 2
    separable: bool = True
    num_sessions: int = 0
    session_size: int = 3
    duration_range: tuple[float, float] = (5.0, 180.0)

    def validate(self) -> None:
        k = self.indicator_count
        if k < 1:
            raise ConfigInvalid("indicator_count must be >= 1")
        if k > len(INDICATOR_ATTRIBUTES):
            raise ConfigInvalid(f"indicator_count must be <= {len(INDICATOR_ATTRIBUTES)}")
        if self.separable and k > MAX_SEPARABLE_INDICATORS:
            raise ConfigInvalid(f"separable generation supports at most {MAX_SEPARABLE_INDICATORS} indicators")
        if self.num_usages < k:
            raise ConfigInvalid("num_usages must be >= indicator_count")
        if self.num_services < 1:
            raise ConfigInvalid("num_services must be >= 1")
        if not self.noise_std >= 0:
            raise ConfigInvalid("noise_std must be >= 0")
        if not 0 <= self.distractor_attributes <= len(DISTRACTORS):
            raise ConfigInvalid(f"distractor_attributes must be in 0..{len(DISTRACTORS)}")
        if self.num_sessions < 0:
            raise ConfigInvalid("num_sessions must be >= 0")
        if self.num_sessions and not 1 <= self.session_size <= self.num_usages:
            raise ConfigInvalid("session_size must be in 1..num_usages")
        lo, hi = self.duration_range
        if not 0 < lo <= hi:
            raise ConfigInvalid("duration_range must satisfy 0 < lo <= hi")


@dataclass(frozen=True)
class GroundTruth:
    service_vectors: dict[str, tuple[float, ...]]
    usage_expectations: dict[str, tuple[float, ...]]
    usage_blocks: dict[str, int]
    usage_durations: dict[str, float]
    indicator_count: int
    block_words: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "indicator_count": self.indicator_count,
            "block_words": list(self.block_words),
            "service_vectors": {k: list(v) for k, v in self.service_vectors.items()},
            "usage_expectations": {k: list(v) for k, v in self.usage_expectations.items()},
            "usage_blocks": dict(self.usage_blocks),
            "usage_durations": dict(self.usage_durations),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GroundTruth":
        return cls(
            service_vectors={k: tuple(v) for k, v in obj["service_vectors"].items()},
            usage_expectations={k: tuple(v) for k, v in obj["usage_expectations"].items()},
            usage_blocks={k: int(v) for k, v in obj["usage_blocks"].items()},
            usage_durations={k: float(v) for k, v in obj["usage_durations"].items()},
            indicator_count=int(obj["indicator_count"]),
            block_words=tuple(obj.get("block_words", ())),
        )


def true_trust(f_s: np.ndarray, f_u: np.ndarray) -> np.ndarray:
    """Adaptive trust, broadcasting over leading axes."""
    return np.minimum(f_s, f_u).sum(axis=-1) / f_u.sum(axis=-1)


def to_rating(t) -> np.ndarray:
    """``clamp(round_half_up(10 t), 1, 10)``; the 1e-9 absorbs float noise at .5 ties."""
    return np.clip(np.floor(10.0 * np.asarray(t) + 0.5 + 1e-9), 1, 10).astype(int)


def _separated(ratings: np.ndarray) -> np.ndarray:
    # ratings: (n, K) block ratings -> rows whose sorted values step by >= 2
    if ratings.shape[1] == 1:
        return np.ones(len(ratings), dtype=bool)
    gaps = np.diff(np.sort(ratings, axis=1), axis=1)
    return (gaps >= 2).all(axis=1)


def _block_expectations(rng, k: int) -> np.ndarray:
    high = rng.integers(70, 101, size=k) / 100
    # lows of one block sum to at most 0.3; this keeps block ratings
    # decoupled enough for separable sampling at five indicators
    cap = 30 if k == 1 else 30 // (k - 1)
    low = rng.integers(0, cap + 1, size=(k, k)) / 100
    low[np.arange(k), np.arange(k)] = high
    return low


def _service_vectors(rng, n: int, blocks: np.ndarray, separable: bool) -> np.ndarray:
    k = blocks.shape[0]
    if not separable:
        return rng.integers(0, 101, size=(n, k)) / 100
    accepted: list[np.ndarray] = []
    drawn = 0
    while sum(len(a) for a in accepted) < n:
        if drawn > _MAX_DRAWS:
            raise ConfigInvalid("could not draw block-separable services; try a different seed")
        cand = rng.integers(0, 101, size=(_BATCH, k)) / 100
        drawn += _BATCH
        ratings = to_rating(true_trust(cand[:, None, :], blocks[None, :, :]))
        accepted.append(cand[_separated(ratings)])
    return np.concatenate(accepted)[:n]


def _usage_profiles(rng, cfg: GeneratorConfig, assignment: np.ndarray, durations: np.ndarray) -> list[UsageProfile]:
    width = len(str(cfg.num_usages))
    profiles = []
    for i in range(cfg.num_usages):
        name = APP_NAMES[i % len(APP_NAMES)]
        if i >= len(APP_NAMES):
            name = f"{name}{i // len(APP_NAMES)}"
        words = {BLOCK_WORDS[assignment[i]], name}
        words.update(w for w in FILLER_WORDS if rng.random() < 0.3)
        profiles.append(UsageProfile(f"U{i + 1:0{width}d}", frozenset(words), float(durations[i])))
    return profiles


def _schema(cfg: GeneratorConfig) -> AttributeSchema:
    numeric = tuple(AttributeSpec(n, NUMERIC, bounds=NUMERIC_BOUNDS) for n in INDICATOR_ATTRIBUTES[: cfg.indicator_count])
    return AttributeSchema(numeric + DISTRACTORS[: cfg.distractor_attributes])


def generate_dataset(cfg: GeneratorConfig) -> tuple[Dataset, GroundTruth]:
    """Services, usages, single-use ratings and (optionally) sessions, with their ground truth.

    Every (service, usage) pair is rated once. Session ratings are generated
    from the significance-weighted closeness aggregate of the session's true
    expectations.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    k = cfg.indicator_count
    lo_b, hi_b = NUMERIC_BOUNDS

    assignment = np.arange(cfg.num_usages) % k
    blocks = _block_expectations(rng, k)
    durations = np.round(rng.uniform(*cfg.duration_range, size=cfg.num_usages), 1)
    usages = _usage_profiles(rng, cfg, assignment, durations)
    f_u = blocks[assignment]

    schema = _schema(cfg)
    f_s = _service_vectors(rng, cfg.num_services, blocks, cfg.separable)
    width = len(str(cfg.num_services))
    services = []
    for i in range(cfg.num_services):
        attrs: dict[str, object] = {
            name: round(lo_b + f_s[i, j] * (hi_b - lo_b), 2) for j, name in enumerate(INDICATOR_ATTRIBUTES[:k])
        }
        for spec in DISTRACTORS[: cfg.distractor_attributes]:
            attrs[spec.name] = spec.categories[int(rng.integers(len(spec.categories)))]
        services.append(ServiceProfile(f"S{i + 1:0{width}d}", attrs))

    t = true_trust(f_s[:, None, :], f_u[None, :, :])  # (services, usages)
    noise = rng.normal(0.0, cfg.noise_std, size=t.shape) if cfg.noise_std > 0 else 0.0
    ratings_arr = to_rating(t + noise)
    ratings = [
        RatingRecord(s.id, u.id, int(ratings_arr[i, j]))
        for i, s in enumerate(services)
        for j, u in enumerate(usages)
    ]

    sessions = _sessions(rng, cfg, f_s, f_u, durations, services, usages)

    truth = GroundTruth(
        service_vectors={s.id: tuple(float(x) for x in f_s[i]) for i, s in enumerate(services)},
        usage_expectations={u.id: tuple(float(x) for x in f_u[j]) for j, u in enumerate(usages)},
        usage_blocks={u.id: int(assignment[j]) for j, u in enumerate(usages)},
        usage_durations={u.id: float(durations[j]) for j, u in enumerate(usages)},
        indicator_count=k,
        block_words=BLOCK_WORDS[:k],
    )
    return Dataset(schema, tuple(services), tuple(usages), tuple(ratings), tuple(sessions)), truth


def _sessions(rng, cfg, f_s, f_u, durations, services, usages) -> list[Session]:
    if cfg.num_sessions == 0:
        return []
    from ..multiuse import aggregate_closeness_weighted, usage_significance

    out = []
    for _ in range(cfg.num_sessions):
        i = int(rng.integers(len(services)))
        picked = np.sort(rng.choice(len(usages), size=cfg.session_size, replace=False))
        sig = usage_significance(durations[picked])
        agg = aggregate_closeness_weighted(f_u[picked], sig).vector.as_array()
        t = true_trust(f_s[i], agg) if agg.sum() > 0 else 1.0
        if cfg.noise_std > 0:
            t = t + rng.normal(0.0, cfg.noise_std)
        out.append(Session(services[i].id, tuple(usages[j].id for j in picked), int(to_rating(t))))
    return out
