"""Service-to-indicator and usage-to-indicator models.

Ratings are scalar, but both networks need per-indicator targets. Service
targets are block means: the label of service ``s`` at indicator ``k`` is
its mean normalized rating over usages in block ``k``. Usage targets are
fitted so that the adaptive trust of each labelled service reproduces the
usage's observed ratings, by coordinate descent on the 0.01 grid.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CATEGORICAL,
    AttributeSchema,
    Dataset,
    IndicatorVector,
    ServiceProfile,
    UsageProfile,
    normalize_rating,
)
from .errors import EmptyInput, SchemaViolation, UnknownMetadataWord, UnratedUsage
from .indicators import IndicatorPartition
from .nnet import Network, TrainConfig, forward, network_new, train

GRID = np.round(np.linspace(0.0, 1.0, 101), 2)
MAX_SWEEPS = 50
_TIE = 1e-12
DEFAULT_HIDDEN = 32


@dataclass(frozen=True)
class MetadataVocabulary:
    words: tuple[str, ...]

    def __post_init__(self):
        words = tuple(self.words)
        if list(words) != sorted(set(words)):
            raise ValueError("vocabulary must be sorted and free of duplicates")
        object.__setattr__(self, "words", words)

    def __len__(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class TrainedModelPair:
    service_model: Network
    usage_model: Network
    schema: AttributeSchema
    vocabulary: MetadataVocabulary
    indicator_count: int
    seed: int = 42

    def __post_init__(self):
        if not (self.service_model.n_outputs == self.usage_model.n_outputs == self.indicator_count):
            raise ValueError("both models must output one value per indicator")
        if self.service_model.n_inputs != self.schema.width:
            raise ValueError("service model input width differs from schema width")
        if self.usage_model.n_inputs != len(self.vocabulary):
            raise ValueError("usage model input width differs from vocabulary size")


def build_metadata_vocabulary(usages: Sequence[UsageProfile]) -> MetadataVocabulary:
    if not usages:
        raise EmptyInput("no usages to build a vocabulary from")
    return MetadataVocabulary(tuple(sorted(set().union(*(u.metadata for u in usages)))))


def encode_descriptor(usage: UsageProfile | set[str], vocabulary: MetadataVocabulary | Sequence[str]) -> np.ndarray:
    """Binary descriptor: bit k is set iff vocabulary word k is in the usage's metadata.

    ``vocabulary`` may be any ordered word list; word order is taken as given.
    """
    words = vocabulary.words if isinstance(vocabulary, MetadataVocabulary) else tuple(vocabulary)
    metadata = usage.metadata if isinstance(usage, UsageProfile) else frozenset(usage)
    unknown = metadata - set(words)
    if unknown:
        raise UnknownMetadataWord(f"metadata not in vocabulary: {sorted(unknown)}")
    return np.array([1.0 if w in metadata else 0.0 for w in words])


def encode_service_attributes(service: ServiceProfile, schema: AttributeSchema) -> np.ndarray:
    """One-hot categorical and min-max scaled numeric attributes, in schema order."""
    out: list[float] = []
    extra = set(service.attributes) - set(schema.names)
    if extra:
        raise SchemaViolation(f"service {service.id}: undeclared attributes {sorted(extra)}")
    for spec in schema.attributes:
        if spec.name not in service.attributes:
            raise SchemaViolation(f"service {service.id}: missing attribute {spec.name!r}")
        value = service.attributes[spec.name]
        if not spec.admits(value):
            raise SchemaViolation(f"service {service.id}: {spec.name}={value!r} not admitted")
        if spec.kind == CATEGORICAL:
            out.extend(1.0 if c == value else 0.0 for c in spec.categories)
        else:
            lo, hi = spec.bounds
            out.append((float(value) - lo) / (hi - lo))
    return np.array(out)


def derive_service_indicator_labels(
    dataset: Dataset, partition: IndicatorPartition
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-service block-mean labels with a mask of which blocks rated it."""
    k = partition.count
    blocks_of: dict[str, list[int]] = defaultdict(list)
    for i, block in enumerate(partition.blocks):
        for uid in block.members:
            blocks_of[uid].append(i)
    values: dict[str, list[list[float]]] = {}
    for rec in dataset.ratings:
        per_block = values.setdefault(rec.service_id, [[] for _ in range(k)])
        for i in blocks_of.get(rec.usage_id, ()):
            per_block[i].append(normalize_rating(rec.rating))
    labels = {}
    for sid in sorted(values):
        per_block = values[sid]
        mask = np.array([1.0 if v else 0.0 for v in per_block])
        if not mask.any():
            continue
        # fsum keeps the mean independent of record order
        labels[sid] = (np.array([math.fsum(v) / len(v) if v else 0.0 for v in per_block]), mask)
    return labels


def _fill_masked(service_labels: Mapping[str, tuple[np.ndarray, np.ndarray]]) -> dict[str, np.ndarray]:
    # masked components take the indicator's mean over services that have it
    vals = np.stack([v for v, _ in service_labels.values()])
    masks = np.stack([m for _, m in service_labels.values()])
    seen = masks.sum(axis=0)
    col_mean = np.divide((vals * masks).sum(axis=0), seen, out=np.full(vals.shape[1], 0.5), where=seen > 0)
    return {sid: np.where(m > 0, v, col_mean) for sid, (v, m) in service_labels.items()}


def _trust_rows(f_s: np.ndarray, f_u: np.ndarray) -> np.ndarray:
    """Adaptive trust for each row of ``f_s`` against one expectation ``f_u``."""
    total = f_u.sum()
    if total <= 0:
        return np.full(len(f_s), np.nan)
    return np.minimum(f_s, f_u).sum(axis=1) / total


def _objective(f_s, targets, f_u) -> float:
    t = _trust_rows(f_s, f_u)
    return float("inf") if np.isnan(t).any() else float(((t - targets) ** 2).sum())


def fit_usage_expectation(
    f_s: np.ndarray, targets: np.ndarray, start: float = 0.5, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, list[float]]:
    """Grid coordinate descent for one usage; returns the vector and per-sweep objective.

    Each step scans all 101 grid values of one component with the others
    fixed and moves it to the smallest minimizer. Stops after a sweep in
    which nothing moved, or after ``max_sweeps``.
    """
    k = f_s.shape[1]
    f_u = np.full(k, start)
    best = _objective(f_s, targets, f_u)
    history = [best]
    mins = np.minimum(f_s[:, :, None], GRID[None, None, :])  # (services, k, grid)
    for _ in range(max_sweeps):
        moved = False
        for j in range(k):
            rest = np.delete(f_u, j)
            rest_min = np.minimum(np.delete(f_s, j, axis=1), rest).sum(axis=1)
            totals = rest.sum() + GRID
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (rest_min[:, None] + mins[:, j, :]) / totals[None, :]
                obj = ((t - targets[:, None]) ** 2).sum(axis=0)
            obj[totals <= 0] = np.inf
            # smallest grid value among (float-noise) ties
            i = int(np.flatnonzero(obj <= obj.min() + _TIE)[0])
            if GRID[i] != f_u[j]:
                f_u[j] = GRID[i]
                moved = True
            best = float(obj[i])
        history.append(best)
        if not moved:
            break
    return f_u, history


def derive_usage_expectation_labels(
    dataset: Dataset, service_labels: Mapping[str, tuple[np.ndarray, np.ndarray]]
) -> dict[str, np.ndarray]:
    """Expectation vector per usage, chosen so predicted trust matches its ratings."""
    if not service_labels:
        raise EmptyInput("no service labels")
    filled = _fill_masked(service_labels)
    by_usage: dict[str, list[tuple[str, float]]] = defaultdict(list)
    for rec in dataset.ratings:
        if rec.service_id in filled:
            by_usage[rec.usage_id].append((rec.service_id, normalize_rating(rec.rating)))
    unrated = sorted(u.id for u in dataset.usages if u.id not in by_usage)
    if unrated:
        raise UnratedUsage(f"usages without ratings on labelled services: {unrated}")
    labels = {}
    for uid in sorted(by_usage):
        # sort for independence from record order
        pairs = sorted(by_usage[uid])
        f_s = np.stack([filled[sid] for sid, _ in pairs])
        targets = np.array([r for _, r in pairs])
        labels[uid], _ = fit_usage_expectation(f_s, targets)
    return labels


def _trained(sizes, samples, config: TrainConfig) -> Network:
    net = network_new(sizes, seed=config.seed)
    train(net, samples, config)
    return net


def train_service_model(
    dataset: Dataset,
    partition: IndicatorPartition,
    schema: AttributeSchema,
    config: TrainConfig,
    hidden: int = DEFAULT_HIDDEN,
    labels: Mapping[str, tuple[np.ndarray, np.ndarray]] | None = None,
) -> Network:
    if labels is None:
        labels = derive_service_indicator_labels(dataset, partition)
    samples = [
        (encode_service_attributes(dataset.service(sid), schema), target, mask)
        for sid, (target, mask) in sorted(labels.items())
    ]
    return _trained((schema.width, hidden, partition.count), samples, config)


def train_usage_model(
    dataset: Dataset,
    usage_labels: Mapping[str, np.ndarray],
    vocabulary: MetadataVocabulary,
    config: TrainConfig,
    hidden: int = DEFAULT_HIDDEN,
) -> Network:
    if len(vocabulary) == 0:
        raise EmptyInput("empty metadata vocabulary; usages cannot be told apart")
    if not usage_labels:
        raise EmptyInput("no usage labels")
    samples = [
        (encode_descriptor(dataset.usage(uid), vocabulary), target, None)
        for uid, target in sorted(usage_labels.items())
    ]
    k = len(next(iter(usage_labels.values())))
    return _trained((len(vocabulary), hidden, k), samples, config)


def fit_model_pair(
    dataset: Dataset,
    partition: IndicatorPartition,
    config: TrainConfig | None = None,
    hidden: int = DEFAULT_HIDDEN,
) -> TrainedModelPair:
    """Derive labels and train both networks on ``dataset``'s ratings."""
    config = config or TrainConfig()
    vocabulary = build_metadata_vocabulary(dataset.usages)
    service_labels = derive_service_indicator_labels(dataset, partition)
    usage_labels = derive_usage_expectation_labels(dataset, service_labels)
    service_model = train_service_model(dataset, partition, dataset.schema, config, hidden, service_labels)
    usage_model = train_usage_model(dataset, usage_labels, vocabulary, config, hidden)
    return TrainedModelPair(service_model, usage_model, dataset.schema, vocabulary, partition.count, config.seed)


def predict_service_indicators(pair: TrainedModelPair, service: ServiceProfile) -> IndicatorVector:
    out = forward(pair.service_model, encode_service_attributes(service, pair.schema))
    return IndicatorVector(tuple(out))


def predict_usage_expectations(pair: TrainedModelPair, usage: UsageProfile) -> IndicatorVector:
    out = forward(pair.usage_model, encode_descriptor(usage, pair.vocabulary))
    return IndicatorVector(tuple(out))
