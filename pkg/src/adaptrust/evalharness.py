"""Train/test evaluation over the 10 trust levels.

Per level ``l``: precision = correct / detected, recall = correct / actual,
F1 their harmonic mean, and accuracy = (correct_l + correct_not_l) / samples
(one-vs-rest). Empty denominators give 0. Macro figures average over the
levels that occur in the ground truth.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core import Dataset, RatingRecord, Session, UsagePattern, normalize_rating
from .errors import EmptyInput, LengthMismatch, OutOfRange, TooFewRecords
from .indicators import DEFAULT_EPSILON, detect_indicator_count
from .models import DEFAULT_HIDDEN, TrainedModelPair, fit_model_pair
from .multiuse import METHODS, multi_use_trust
from .nnet import TrainConfig
from .trust import LEVELS, assess, trust_level

REPORT_VERSION = 1


@dataclass(frozen=True)
class EvaluationReport:
    precision: tuple[float, ...]  # index l - 1 for level l
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    accuracy: tuple[float, ...]
    support: tuple[int, ...]
    confusion: tuple[tuple[int, ...], ...]  # rows: true level, columns: predicted level
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_accuracy: float
    exact_accuracy: float
    samples: int
    meta: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        out = asdict(self)
        out["format_version"] = REPORT_VERSION
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"{'level':>5} {'support':>7} {'precision':>9} {'recall':>7} {'f1':>7} {'accuracy':>8}"]
        for l in range(LEVELS):
            lines.append(
                f"{l + 1:>5} {self.support[l]:>7} {self.precision[l]:>9.3f} {self.recall[l]:>7.3f} "
                f"{self.f1[l]:>7.3f} {self.accuracy[l]:>8.3f}"
            )
        lines.append(
            f"{'macro':>5} {self.samples:>7} {self.macro_precision:>9.3f} {self.macro_recall:>7.3f} "
            f"{self.macro_f1:>7.3f} {self.macro_accuracy:>8.3f}"
        )
        lines.append(f"exact-level accuracy: {self.exact_accuracy:.3f}")
        return "\n".join(lines)


@dataclass(frozen=True)
class EvalConfig:
    split: float = 0.8
    seed: int = 42
    epsilon: float = DEFAULT_EPSILON
    hidden: int = DEFAULT_HIDDEN
    train: TrainConfig = field(default_factory=TrainConfig)


def split_dataset(dataset: Dataset, ratio: float = 0.8, seed: int = 42) -> tuple[Dataset, list[RatingRecord]]:
    """Seeded shuffle of the rating records, then a ``ratio`` cut.

    Returns the training dataset (same profiles, training ratings only) and
    the held-out records.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie strictly between 0 and 1")
    records = list(dataset.ratings)
    if len(records) < 2:
        raise TooFewRecords("need at least two rating records to split")
    order = np.random.default_rng(seed).permutation(len(records))
    cut = min(max(int(round(ratio * len(records))), 1), len(records) - 1)
    train = [records[i] for i in order[:cut]]
    test = [records[i] for i in order[cut:]]
    return dataset.with_ratings(train), test


def metrics(predicted: Sequence[int], truth: Sequence[int]) -> EvaluationReport:
    if len(predicted) != len(truth):
        raise LengthMismatch(f"{len(predicted)} predictions for {len(truth)} labels")
    if not truth:
        raise EmptyInput("no samples")
    for v in (*predicted, *truth):
        if not 1 <= v <= LEVELS:
            raise OutOfRange(f"level {v} outside 1..{LEVELS}")
    n = len(truth)
    cm = np.zeros((LEVELS, LEVELS), dtype=int)
    for p, t in zip(predicted, truth):
        cm[t - 1, p - 1] += 1
    correct = np.diag(cm)
    actual = cm.sum(axis=1)
    detected = cm.sum(axis=0)
    precision = np.divide(correct, detected, out=np.zeros(LEVELS), where=detected > 0)
    recall = np.divide(correct, actual, out=np.zeros(LEVELS), where=actual > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(LEVELS), where=denom > 0)
    # correct_not_l: samples neither truly l nor predicted l
    correct_not = n - actual - detected + correct
    accuracy = (correct + correct_not) / n
    present = actual > 0
    return EvaluationReport(
        precision=tuple(float(x) for x in precision),
        recall=tuple(float(x) for x in recall),
        f1=tuple(float(x) for x in f1),
        accuracy=tuple(float(x) for x in accuracy),
        support=tuple(int(x) for x in actual),
        confusion=tuple(tuple(int(x) for x in row) for row in cm),
        macro_precision=float(precision[present].mean()),
        macro_recall=float(recall[present].mean()),
        macro_f1=float(f1[present].mean()),
        macro_accuracy=float(accuracy[present].mean()),
        exact_accuracy=float(correct.sum() / n),
        samples=n,
    )


def train_pipeline(train: Dataset, config: EvalConfig) -> TrainedModelPair:
    """Indicator detection, label derivation and both networks, on training ratings."""
    _, partition = detect_indicator_count(train, config.epsilon)
    return fit_model_pair(train, partition, config.train, config.hidden)


def evaluate_pipeline(dataset: Dataset, config: EvalConfig | None = None) -> EvaluationReport:
    config = config or EvalConfig()
    train, test = split_dataset(dataset, config.split, config.seed)
    pair = train_pipeline(train, config)
    predicted, truth = [], []
    for rec in test:
        score = assess(pair, dataset.service(rec.service_id), dataset.usage(rec.usage_id))
        predicted.append(score.level)
        truth.append(trust_level(normalize_rating(rec.rating)))
    report = metrics(predicted, truth)
    object.__setattr__(report, "meta", {"indicator_count": pair.indicator_count, "train_records": len(train.ratings)})
    return report


def score_sessions(pair: TrainedModelPair, dataset: Dataset, sessions: Sequence[Session], method: str) -> EvaluationReport:
    profiles = {u.id: u for u in dataset.usages}
    predicted, truth = [], []
    for sess in sessions:
        score = multi_use_trust(pair, dataset.service(sess.service_id), UsagePattern(sess.usages), method, profiles)
        predicted.append(score.level)
        truth.append(trust_level(normalize_rating(sess.rating)))
    return metrics(predicted, truth)


def evaluate_multiuse(
    dataset: Dataset,
    method: str,
    config: EvalConfig | None = None,
    sessions: Sequence[Session] | None = None,
) -> EvaluationReport:
    """Train as :func:`evaluate_pipeline` does, then score every session.

    Sessions are never used for training, so all of them are held out.
    """
    if method not in METHODS:
        raise ValueError(f"unknown aggregation method {method!r}; expected one of {METHODS}")
    config = config or EvalConfig()
    sessions = dataset.sessions if sessions is None else tuple(sessions)
    if not sessions:
        raise EmptyInput("dataset carries no sessions")
    train, _ = split_dataset(dataset, config.split, config.seed)
    pair = train_pipeline(train, config)
    report = score_sessions(pair, dataset, sessions, method)
    object.__setattr__(report, "meta", {"indicator_count": pair.indicator_count, "method": method})
    return report
