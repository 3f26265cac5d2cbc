"""Tabular Q-learning / SARSA training with epsilon-greedy exploration."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

import numpy as np

from .mdp import N_ACTIONS, Action, GridEnv, valid_actions

logger = logging.getLogger(__name__)

NEG_INF = float("-inf")


@dataclass
class QTable:
    """State-action values on an n x n grid; invalid actions hold -inf."""

    n: int
    values: np.ndarray

    @classmethod
    def initial(cls, n: int) -> QTable:
        values = np.full((n, n, N_ACTIONS), NEG_INF, dtype=np.float64)
        for row in range(n):
            for col in range(n):
                for a in valid_actions(row, col, n):
                    values[row, col, a] = 0.0
        return cls(n=n, values=values)

    def best_action(self, row: int, col: int) -> Action:
        """Greedy action, ties broken by fixed action order."""
        return Action(int(np.argmax(self.values[row, col])))

    def greedy_policy(self) -> np.ndarray:
        return np.argmax(self.values, axis=2)


@dataclass
class TrainConfig:
    algorithm: str = "q_learning"
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.1
    episodes: int = 10_000
    horizon: int = 50
    seed: int = 0
    window: int = 100
    reward: str = "similarity"

    def __post_init__(self) -> None:
        if self.algorithm not in ("q_learning", "sarsa"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.reward not in ("similarity", "distance"):
            raise ValueError(f"unknown reward mode {self.reward!r}")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must be in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass
class LearningCurve:
    """Per-episode undiscounted returns plus a trailing windowed average."""

    returns: list[float]
    window: int
    window_avg: list[float] = field(default_factory=list)

    @classmethod
    def from_returns(cls, returns: list[float], window: int) -> LearningCurve:
        avg: list[float] = []
        running = 0.0
        for t, r in enumerate(returns):
            running += r
            if t >= window:
                running -= returns[t - window]
            avg.append(running / min(t + 1, window))
        return cls(returns=returns, window=window, window_avg=avg)


def _select(
    qrow: list[float], acts: tuple[int, ...], epsilon: float, rng: random.Random
) -> int:
    """Epsilon-greedy pick over one state's Q values; ties go to action order."""
    if rng.random() < epsilon:
        return acts[rng.randrange(len(acts))]
    best = acts[0]
    best_v = qrow[best]
    for a in acts[1:]:
        if qrow[a] > best_v:
            best_v = qrow[a]
            best = a
    return best


def epsilon_greedy(
    q: QTable, state: tuple[int, int], epsilon: float, rng: random.Random
) -> Action:
    """Draw xi; explore uniformly over valid actions if xi < epsilon, else argmax."""
    row, col = state
    acts = tuple(int(a) for a in valid_actions(row, col, q.n))
    qrow = [float(q.values[row, col, a]) for a in range(N_ACTIONS)]
    return Action(_select(qrow, acts, epsilon, rng))


def q_learning_update(
    q: QTable,
    s: tuple[int, int],
    a: Action,
    r: float,
    s_next: tuple[int, int],
    alpha: float,
    gamma: float,
) -> QTable:
    """Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); in place."""
    target = r + gamma * float(np.max(q.values[s_next[0], s_next[1]]))
    q.values[s[0], s[1], a] += alpha * (target - q.values[s[0], s[1], a])
    return q


def sarsa_update(
    q: QTable,
    s: tuple[int, int],
    a: Action,
    r: float,
    s_next: tuple[int, int],
    a_next: Action,
    alpha: float,
    gamma: float,
) -> QTable:
    """Q(s,a) += alpha * (r + gamma * Q(s',a') - Q(s,a)); in place."""
    target = r + gamma * float(q.values[s_next[0], s_next[1], a_next])
    q.values[s[0], s[1], a] += alpha * (target - q.values[s[0], s[1], a])
    return q


def train(
    env: GridEnv, config: TrainConfig, initial_q: QTable | None = None
) -> tuple[QTable, LearningCurve]:
    """Run episodic training; start states are uniform over all cells.

    Episodes have no terminal state: each runs exactly ``config.horizon``
    steps. Deterministic for a fixed seed. When ``initial_q`` is given,
    training continues from it (used for online incremental updates).
    """
    n = env.n
    n2 = n * n
    nxt, rew, valid = env.tables()
    if initial_q is not None:
        if initial_q.n != n:
            raise ValueError("initial Q table does not match the grid side")
        qv = [[float(initial_q.values[s // n, s % n, a]) for a in range(N_ACTIONS)] for s in range(n2)]
    else:
        qv = [
            [0.0 if a in valid[s] else NEG_INF for a in range(N_ACTIONS)]
            for s in range(n2)
        ]

    rng = random.Random(config.seed)
    alpha, gamma, epsilon = config.alpha, config.gamma, config.epsilon
    sarsa = config.algorithm == "sarsa"
    returns: list[float] = []

    for _ in range(config.episodes):
        s = rng.randrange(n2)
        total = 0.0
        if sarsa:
            a = _select(qv[s], valid[s], epsilon, rng)
            for _step in range(config.horizon):
                ns = nxt[s][a]
                r = rew[s][a]
                na = _select(qv[ns], valid[ns], epsilon, rng)
                row = qv[s]
                row[a] += alpha * (r + gamma * qv[ns][na] - row[a])
                total += r
                s, a = ns, na
        else:
            for _step in range(config.horizon):
                a = _select(qv[s], valid[s], epsilon, rng)
                ns = nxt[s][a]
                r = rew[s][a]
                row = qv[s]
                row[a] += alpha * (r + gamma * max(qv[ns]) - row[a])
                total += r
                s = ns
        returns.append(total)

    values = np.array(qv, dtype=np.float64).reshape(n, n, N_ACTIONS)
    return QTable(n=n, values=values), LearningCurve.from_returns(returns, config.window)


def value_iteration_oracle(
    env: GridEnv,
    gamma: float,
    horizon: int | None = None,
    tol: float = 1e-10,
    max_sweeps: int = 1_000_000,
) -> np.ndarray:
    """Optimal greedy policy via synchronous Q-iteration.

    With ``horizon`` set, runs exactly that many backups from Q=0
    (finite-horizon optimum); otherwise iterates to a sup-norm fixed point at
    ``tol``, which requires gamma < 1. Returns an (n, n) array of action
    indices, ties broken by fixed action order.
    """
    if horizon is None and not gamma < 1:
        raise ValueError("converged value iteration needs gamma < 1")
    n = env.n
    n2 = n * n
    nxt, rew, valid = env.tables()

    q = np.zeros((n2, N_ACTIONS), dtype=np.float64)
    mask = np.zeros((n2, N_ACTIONS), dtype=bool)
    r = np.zeros((n2, N_ACTIONS), dtype=np.float64)
    nxt_idx = np.zeros((n2, N_ACTIONS), dtype=np.int64)
    for s in range(n2):
        for a in valid[s]:
            mask[s, a] = True
            r[s, a] = rew[s][a]
            nxt_idx[s, a] = nxt[s][a]

    sweeps = horizon if horizon is not None else max_sweeps
    for _ in range(sweeps):
        v = np.where(mask, q, NEG_INF).max(axis=1)
        new_q = np.where(mask, r + gamma * v[nxt_idx], 0.0)
        delta = float(np.max(np.abs(new_q - q)))
        q = new_q
        if horizon is None and delta < tol:
            break
    else:
        if horizon is None:
            logger.warning("value iteration hit max_sweeps without reaching tol=%g", tol)

    policy = np.where(mask, q, NEG_INF).argmax(axis=1)
    return policy.reshape(n, n)
