"""Inference of the number of trust indicators from rating histories.

Each service's ratings are split into groups of usages that rated it alike
(1-D gap clustering). Walking the services in a fixed order, those groups
refine a running partition of usages: a block that meets a single group
absorbs its unseen usages, a block that meets several groups is split along
them. The final block count is the indicator count.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import Dataset, RatingRecord, normalize_rating
from .errors import EmptyInput

DEFAULT_EPSILON = 0.15


@dataclass(frozen=True)
class UsageCluster:
    members: frozenset[str]
    mean_rating: float

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        if not self.members:
            raise EmptyInput("a usage cluster needs at least one member")
        if not 0.0 <= self.mean_rating <= 1.0:
            raise ValueError(f"mean_rating {self.mean_rating} outside [0, 1]")


@dataclass(frozen=True)
class IndicatorPartition:
    blocks: tuple[UsageCluster, ...]
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise EmptyInput("a partition needs at least one block")

    @property
    def count(self) -> int:
        return len(self.blocks)

    def usages(self) -> frozenset[str]:
        return frozenset().union(*(b.members for b in self.blocks))

    def block_of(self, usage_id: str) -> list[int]:
        return [k for k, b in enumerate(self.blocks) if usage_id in b.members]

    def member_sets(self) -> list[frozenset[str]]:
        return [b.members for b in self.blocks]


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    # fsum is exactly rounded, so the mean does not depend on record order
    return math.fsum(values) / len(values)


def cluster_by_rating(service_records: Sequence[tuple[str, float]], epsilon: float = DEFAULT_EPSILON) -> list[UsageCluster]:
    """Gap clustering of (usage_id, rating) pairs on the unit scale.

    A new cluster starts wherever consecutive sorted ratings differ by more
    than ``epsilon``. A usage listed more than once is averaged first.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not service_records:
        raise EmptyInput("no ratings to cluster")
    per_usage: dict[str, list[float]] = defaultdict(list)
    for uid, r in service_records:
        per_usage[uid].append(float(r))
    points = sorted(((_mean(rs), uid) for uid, rs in per_usage.items()))

    clusters: list[UsageCluster] = []
    current = [points[0]]
    for prev, point in zip(points, points[1:]):
        # small slack so a 0.15 gap built from 0.1-step ratings is not split by float noise
        if point[0] - prev[0] > epsilon + 1e-12:
            clusters.append(UsageCluster(frozenset(u for _, u in current), _mean(r for r, _ in current)))
            current = []
        current.append(point)
    clusters.append(UsageCluster(frozenset(u for _, u in current), _mean(r for r, _ in current)))
    return clusters


def _dedupe(blocks: Iterable[UsageCluster]) -> list[UsageCluster]:
    seen = set()
    out = []
    for b in blocks:
        if b.members not in seen:
            seen.add(b.members)
            out.append(b)
    return out


def refine_partition(
    current: IndicatorPartition,
    next_clusters: Sequence[UsageCluster],
    ratings: Mapping[str, float] | None = None,
) -> IndicatorPartition:
    """One refinement step against the clustering of the next service.

    A block meeting one cluster absorbs that cluster's new usages; a block
    meeting several is split along them. Usages already placed elsewhere are
    never moved, and the new usages of a cluster join only the first piece
    built from it, so the result stays a partition.

    ``ratings`` supplies each usage's reference (overall mean) rating. It is
    used to give blocks a mean and to place members of a split block that
    the next service never rated: each joins the piece whose mean is nearest
    to its own rating. Without it, the block's own mean stands in.
    Clusters sharing no usage with the partition are added as new blocks.
    """
    ratings = ratings or {}
    known = current.usages()
    fresh = [set(s.members - known) for s in next_clusters]

    def take_fresh(i):
        members, fresh[i] = fresh[i], set()
        return members

    def block_mean(members, fallback):
        vals = [ratings[u] for u in members if u in ratings]
        return _mean(vals) if vals else fallback

    out: list[UsageCluster] = []
    for block in current.blocks:
        sim = [i for i, s in enumerate(next_clusters) if s.members & block.members]
        if not sim:
            out.append(block)
        elif len(sim) == 1:
            members = block.members | take_fresh(sim[0])
            out.append(UsageCluster(members, block_mean(members, next_clusters[sim[0]].mean_rating)))
        else:
            # piece mean from this service's own ratings (its cluster mean)
            pieces = [[set(block.members & next_clusters[i].members), next_clusters[i].mean_rating, i] for i in sim]
            covered = set().union(*(p[0] for p in pieces))
            for uid in sorted(block.members - covered):
                r = ratings.get(uid, block.mean_rating)
                nearest = min(range(len(pieces)), key=lambda j: (abs(pieces[j][1] - r), j))
                pieces[nearest][0].add(uid)
            for members, mean, i in pieces:
                members |= take_fresh(i)
                out.append(UsageCluster(frozenset(members), block_mean(members, mean)))
    # groups made only of usages the partition has not seen yet become blocks
    out.extend(s for s in next_clusters if not s.members & known)
    return IndicatorPartition(tuple(_dedupe(out)), current.epsilon)


def _group_by_service(records: Sequence[RatingRecord]) -> dict[str, list[tuple[str, float]]]:
    groups: dict[str, list[tuple[str, float]]] = defaultdict(list)
    for rec in records:
        groups[rec.service_id].append((rec.usage_id, normalize_rating(rec.rating)))
    return groups


def detect_indicator_count(
    dataset: Dataset | Sequence[RatingRecord], epsilon: float = DEFAULT_EPSILON
) -> tuple[int, IndicatorPartition]:
    """Number of trust indicators and the usage partition behind it.

    Services are visited in ascending id order; the first one's clustering
    seeds the partition and every later one refines it.
    """
    records = dataset.ratings if isinstance(dataset, Dataset) else tuple(dataset)
    if not records:
        raise EmptyInput("no rating records")
    groups = _group_by_service(records)

    per_usage: dict[str, list[float]] = defaultdict(list)
    for rec in records:
        per_usage[rec.usage_id].append(normalize_rating(rec.rating))
    overall = {u: _mean(rs) for u, rs in per_usage.items()}

    service_ids = sorted(groups)
    partition = IndicatorPartition(tuple(cluster_by_rating(groups[service_ids[0]], epsilon)), epsilon)
    for sid in service_ids[1:]:
        partition = refine_partition(partition, cluster_by_rating(groups[sid], epsilon), overall)

    blocks = sorted(_dedupe(partition.blocks), key=lambda b: sorted(b.members))
    partition = IndicatorPartition(tuple(blocks), epsilon)
    return partition.count, partition
