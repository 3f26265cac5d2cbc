"""Recommendation generation: rank start states, walk the grid, emit items."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

import numpy as np

from .mdp import jaccard, transition
from .persistence import GridModel
from .trainer import epsilon_greedy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Explanation:
    cell: tuple[int, int]
    user_set_size: int
    item_set_size: int


@dataclass(frozen=True)
class RecommendedItem:
    item_id: int
    explanation: Explanation


@dataclass
class Recommendation:
    items: list[RecommendedItem]
    trace: list[tuple[int, int]]

    def item_ids(self) -> list[int]:
        return [it.item_id for it in self.items]


@dataclass
class RecommendationRequest:
    profile: frozenset[int]
    n: int = 30
    k: int = 3
    epsilon: float = 0.1
    max_steps: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("recommendation list length must be >= 1")
        if self.k < 1:
            raise ValueError("candidate start-state count must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must be in [0, 1]")


def start_states(profile: frozenset[int] | set[int], model: GridModel, k: int) -> list[tuple[int, int]]:
    """Top-k cells by Jaccard similarity between the profile and cell item sets.

    Ties are broken by row-major cell index.
    """
    if not profile:
        raise ValueError("profile must be non-empty")
    if not 1 <= k <= model.n * model.n:
        raise ValueError(f"k must be in [1, {model.n * model.n}]")
    profile = frozenset(profile)
    scored = []
    for idx in range(model.n * model.n):
        scored.append((-jaccard(profile, model.item_sets[idx]), idx))
    scored.sort()
    return [divmod(idx, model.n) for _, idx in scored[:k]]


def walk_and_recommend(model: GridModel, request: RecommendationRequest) -> Recommendation:
    """Walk the grid from the top-k start states, emitting unseen cell items.

    At each visited cell the items of its item set not in the profile and not
    yet emitted are appended, most popular first (ties by item id). A walk
    ends when the list is full, its step budget is spent, or every grid item
    has been emitted; the procedure ends when the list is full or all k walks
    have ended.
    """
    q = model.q_table()
    if not np.any(model.q[np.isfinite(model.q)]):
        logger.warning("recommending from an untrained (all-zero) Q-table")
    pop = model.item_popularity
    profile = frozenset(request.profile)
    starts = start_states(profile, model, request.k)
    eligible_universe = model.all_items() - profile

    rng = random.Random(request.seed)
    emitted: set[int] = set()
    items: list[RecommendedItem] = []
    trace: list[tuple[int, int]] = []

    for start in starts:
        if len(items) >= request.n:
            break
        row, col = start
        steps_left = request.max_steps
        while True:
            trace.append((row, col))
            idx = model.cell_index(row, col)
            cell_items = model.item_sets[idx]
            fresh = sorted(cell_items - profile - emitted, key=lambda i: (-pop.get(i, 0), i))
            expl = Explanation((row, col), len(model.user_sets[idx]), len(cell_items))
            for it in fresh:
                if len(items) >= request.n:
                    break
                items.append(RecommendedItem(it, expl))
                emitted.add(it)
            if len(items) >= request.n or emitted >= eligible_universe or steps_left == 0:
                break
            action = epsilon_greedy(q, (row, col), request.epsilon, rng)
            row, col = transition(row, col, action, model.n)
            steps_left -= 1
    return Recommendation(items=items, trace=trace)


def explain(model: GridModel, cell: tuple[int, int]) -> Explanation:
    """Current user/item set sizes for a cell (reflects online updates)."""
    idx = model.cell_index(cell[0], cell[1])
    return Explanation(
        (cell[0], cell[1]), len(model.user_sets[idx]), len(model.item_sets[idx])
    )
