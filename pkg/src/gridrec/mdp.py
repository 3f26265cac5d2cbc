"""Deterministic n x n gridworld whose states carry biclusters.

The reward for moving between adjacent states is the Jaccard similarity
(intersection over union) of their user sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

N_ACTIONS = 4


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


_DELTA = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}


@dataclass(frozen=True)
class GridState:
    row: int
    col: int
    users: frozenset[int]
    items: frozenset[int]


def valid_actions(row: int, col: int, n: int) -> tuple[Action, ...]:
    """Actions whose target cell stays inside the grid, in fixed enum order."""
    if n < 2:
        raise ValueError("grid side must be at least 2 for any action to be valid")
    if not (0 <= row < n and 0 <= col < n):
        raise ValueError(f"cell ({row}, {col}) out of bounds for n={n}")
    acts = []
    for a in Action:
        dr, dc = _DELTA[a]
        if 0 <= row + dr < n and 0 <= col + dc < n:
            acts.append(a)
    return tuple(acts)


def transition(row: int, col: int, action: Action, n: int) -> tuple[int, int]:
    """Target cell of the action; raises if the move would leave the grid."""
    dr, dc = _DELTA[Action(action)]
    nr, nc = row + dr, col + dc
    if not (0 <= nr < n and 0 <= nc < n):
        raise ValueError(f"action {Action(action).name} leaves the grid from ({row}, {col})")
    return nr, nc


def jaccard(a: frozenset[int] | set[int], b: frozenset[int] | set[int]) -> float:
    """Intersection over union of two sets."""
    union = len(a | b)
    if union == 0:
        raise ValueError("jaccard of two empty sets is undefined")
    return len(a & b) / union


class GridEnv:
    """Gridworld over row-major lists of per-cell user and item sets.

    The sets are held by reference, so online mutation of a cell's user set is
    visible to subsequent reward computations. ``reward_mode`` defaults to the
    Jaccard similarity of adjacent user sets; "distance" flips it to
    1 - similarity as an escape hatch.
    """

    def __init__(
        self,
        n: int,
        user_sets: list[set[int]],
        item_sets: list[set[int]],
        reward_mode: str = "similarity",
    ):
        if n < 2:
            raise ValueError("grid side must be at least 2")
        if len(user_sets) != n * n or len(item_sets) != n * n:
            raise ValueError(f"need exactly {n * n} user and item sets")
        if reward_mode not in ("similarity", "distance"):
            raise ValueError(f"unknown reward mode {reward_mode!r}")
        for idx, (u, i) in enumerate(zip(user_sets, item_sets)):
            if not u or not i:
                raise ValueError(f"cell {divmod(idx, n)} has an empty user or item set")
        self.n = n
        self.user_sets = user_sets
        self.item_sets = item_sets
        self.reward_mode = reward_mode

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.n and 0 <= col < self.n):
            raise ValueError(f"cell ({row}, {col}) out of bounds for n={self.n}")
        return row * self.n + col

    def state(self, row: int, col: int) -> GridState:
        idx = self.index(row, col)
        return GridState(row, col, frozenset(self.user_sets[idx]), frozenset(self.item_sets[idx]))

    def valid_actions(self, row: int, col: int) -> tuple[Action, ...]:
        return valid_actions(row, col, self.n)

    def reward(self, row: int, col: int, next_row: int, next_col: int) -> float:
        sim = jaccard(
            self.user_sets[self.index(row, col)], self.user_sets[self.index(next_row, next_col)]
        )
        return sim if self.reward_mode == "similarity" else 1.0 - sim

    def step(self, row: int, col: int, action: Action) -> tuple[int, int, float]:
        nr, nc = transition(row, col, action, self.n)
        return nr, nc, self.reward(row, col, nr, nc)

    def tables(self) -> tuple[list[list[int]], list[list[float]], list[tuple[int, ...]]]:
        """Flat next-state, reward, and valid-action tables for training loops.

        Snapshot of the current user sets; invalid actions carry next state -1
        and reward -inf.
        """
        n = self.n
        nxt: list[list[int]] = []
        rew: list[list[float]] = []
        valid: list[tuple[int, ...]] = []
        for s in range(n * n):
            row, col = divmod(s, n)
            acts = valid_actions(row, col, n)
            valid.append(tuple(int(a) for a in acts))
            nxt_row = [-1] * N_ACTIONS
            rew_row = [float("-inf")] * N_ACTIONS
            for a in acts:
                nr, nc = transition(row, col, a, n)
                nxt_row[a] = nr * n + nc
                rew_row[a] = self.reward(row, col, nr, nc)
            nxt.append(nxt_row)
            rew.append(rew_row)
        return nxt, rew, valid

    def reward_array(self) -> np.ndarray:
        """(n*n, 4) reward snapshot, -inf on invalid actions."""
        _, rew, _ = self.tables()
        return np.array(rew, dtype=np.float64)
