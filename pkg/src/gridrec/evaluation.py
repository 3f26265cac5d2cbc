"""Cold-start top-N evaluation: P@N / R@N for the grid walker and baselines."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ingest import BinaryMatrix, ColdStartSplit
from .persistence import GridModel
from .recommender import RecommendationRequest, walk_and_recommend

logger = logging.getLogger(__name__)

ALGORITHMS = ("global_average", "user_based", "item_based", "proposed")


def precision_at_n(recommended: list[int], hidden: frozenset[int] | set[int], n: int) -> float:
    """|top-N intersect hidden| / N; the denominator is N even for short lists."""
    if n < 1:
        raise ValueError("N must be >= 1")
    return len(set(recommended[:n]) & set(hidden)) / n


def recall_at_n(recommended: list[int], hidden: frozenset[int] | set[int], n: int) -> float:
    """|top-N intersect hidden| / |hidden|."""
    if not hidden:
        raise ValueError("hidden set must be non-empty")
    return len(set(recommended[:n]) & set(hidden)) / len(hidden)


def _popularity_order(train: BinaryMatrix) -> list[int]:
    counts = train.item_counts()
    return sorted(counts, key=lambda i: (-counts[i], i))


def baseline_global_average(train: BinaryMatrix, profile: set[int], n: int) -> list[int]:
    """Most-popular items in training, profile items excluded."""
    out = [i for i in _popularity_order(train) if i not in profile]
    return out[:n]


def baseline_user_cf(
    train: BinaryMatrix, profile: set[int], n: int, neighbors: int = 50
) -> list[int]:
    """Jaccard user-kNN: the most similar training users vote for their items.

    Falls back to global popularity when no training user overlaps the
    profile; short lists are padded with popularity so every call yields N
    items.
    """
    if not profile:
        raise ValueError("profile must be non-empty")
    profile_mask = 0
    for raw in profile:
        dense = train.item_index.get(raw)
        if dense is not None:
            profile_mask |= 1 << dense

    scores: dict[int, float] = {}
    if profile_mask:
        p_count = profile_mask.bit_count()
        sims = []
        for u, row in enumerate(train.rows):
            inter = (row & profile_mask).bit_count()
            if inter == 0:
                continue
            union = row.bit_count() + p_count - inter
            sims.append((-(inter / union), u))
        sims.sort()
        for neg_sim, u in sims[:neighbors]:
            sim = -neg_sim
            m = train.rows[u]
            while m:
                j = (m & -m).bit_length() - 1
                raw = train.item_ids[j]
                scores[raw] = scores.get(raw, 0.0) + sim
                m &= m - 1

    ranked = [raw for raw in sorted(scores, key=lambda i: (-scores[i], i)) if raw not in profile]
    if len(ranked) < n:
        seen = set(ranked)
        ranked.extend(
            i for i in _popularity_order(train) if i not in profile and i not in seen
        )
    return ranked[:n]


class ItemCosineIndex:
    """Item-item cosine similarity over binary columns, capped per row.

    Each item keeps only its top-``cap`` most similar other items
    (ties by item id); building the index costs one dense matmul.
    """

    def __init__(self, train: BinaryMatrix, cap: int = 50):
        self.train = train
        m = train.to_numpy().astype(np.float64)
        deg = m.sum(axis=0)
        co = m.T @ m
        with np.errstate(divide="ignore", invalid="ignore"):
            sim = co / np.sqrt(np.outer(deg, deg))
        sim = np.nan_to_num(sim, nan=0.0, posinf=0.0, neginf=0.0)
        np.fill_diagonal(sim, 0.0)
        if cap < sim.shape[0] - 1:
            capped = np.zeros_like(sim)
            ids = np.arange(sim.shape[0])
            for j in range(sim.shape[0]):
                order = np.lexsort((ids, -sim[j]))[:cap]
                capped[j, order] = sim[j, order]
            sim = capped
        self.sim = sim

    def score(self, profile: set[int]) -> np.ndarray:
        """Summed similarity of every item to the profile's known items."""
        out = np.zeros(self.train.n_items, dtype=np.float64)
        for raw in profile:
            dense = self.train.item_index.get(raw)
            if dense is not None:
                out += self.sim[dense]
        return out

    def recommend(self, profile: set[int], n: int) -> list[int]:
        if not profile:
            raise ValueError("profile must be non-empty")
        scores = self.score(profile)
        order = np.lexsort((np.array(self.train.item_ids), -scores))
        ranked = [
            self.train.item_ids[j]
            for j in order
            if scores[j] > 0 and self.train.item_ids[j] not in profile
        ]
        if len(ranked) < n:
            seen = set(ranked)
            ranked.extend(
                i
                for i in _popularity_order(self.train)
                if i not in profile and i not in seen
            )
        return ranked[:n]


def baseline_item_cf(
    train: BinaryMatrix, profile: set[int], n: int, similar_cap: int = 50
) -> list[int]:
    """Binary-cosine item-kNN scores summed over the profile items."""
    return ItemCosineIndex(train, similar_cap).recommend(profile, n)


@dataclass
class EvalConfig:
    n: int = 30
    k: int = 3
    epsilon: float = 0.1
    seed: int = 0
    neighbors: int = 50
    similar_cap: int = 50
    max_steps: int = 100
    dataset: str = ""


@dataclass
class EvalReport:
    dataset: str
    n: int
    seed: int
    users_evaluated: int
    metrics: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "version": 1,
            "dataset": self.dataset,
            "n": self.n,
            "seed": self.seed,
            "users_evaluated": self.users_evaluated,
            "metrics": {
                algo: {
                    "precision_at_n": self.metrics[algo]["precision_at_n"],
                    "recall_at_n": self.metrics[algo]["recall_at_n"],
                }
                for algo in self.metrics
            },
        }


def evaluate_cold_start(
    split: ColdStartSplit, model: GridModel, config: EvalConfig
) -> EvalReport:
    """Average P@N / R@N per algorithm over every evaluable test user.

    Each user's observed items are the only profile any algorithm sees; the
    hidden set is the ground truth. Deterministic for fixed seeds.
    """
    users = [h for h in split.test_users if h.hidden]
    if not users:
        raise ValueError("no evaluable users: every holdout has an empty hidden set")
    train = split.train
    item_index = ItemCosineIndex(train, config.similar_cap)

    sums = {algo: [0.0, 0.0] for algo in ALGORITHMS}
    for holdout in sorted(users, key=lambda h: h.user_id):
        profile = set(holdout.observed)
        recs: dict[str, list[int]] = {
            "global_average": baseline_global_average(train, profile, config.n),
            "user_based": baseline_user_cf(train, profile, config.n, config.neighbors),
            "item_based": item_index.recommend(profile, config.n),
        }
        request = RecommendationRequest(
            profile=frozenset(profile),
            n=config.n,
            k=config.k,
            epsilon=config.epsilon,
            max_steps=config.max_steps,
            seed=(config.seed << 20) ^ holdout.user_id,
        )
        recs["proposed"] = walk_and_recommend(model, request).item_ids()

        for algo, rec in recs.items():
            sums[algo][0] += precision_at_n(rec, holdout.hidden, config.n)
            sums[algo][1] += recall_at_n(rec, holdout.hidden, config.n)

    count = len(users)
    metrics = {
        algo: {"precision_at_n": s[0] / count, "recall_at_n": s[1] / count}
        for algo, s in sums.items()
    }
    return EvalReport(
        dataset=config.dataset,
        n=config.n,
        seed=config.seed,
        users_evaluated=count,
        metrics=metrics,
    )
