"""Online feedback: satisfied users join a cell's user set, shifting rewards.

Events are appended to a durable JSONL log before any in-memory mutation so a
model can always be reconstructed by replay.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

from .persistence import GridModel, canonical_dumps
from .trainer import TrainConfig, train

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeedbackEvent:
    user_id: int
    cell: tuple[int, int]
    satisfied: bool
    seq: int
    ts: int = 0


@dataclass
class RetrainSchedule:
    every_f_events: int = 10
    episodes: int = 100

    def __post_init__(self) -> None:
        if self.every_f_events < 1:
            raise ValueError("every_f_events must be >= 1")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


def apply_feedback(model: GridModel, event: FeedbackEvent) -> GridModel:
    """Record one feedback event on the model.

    Satisfied feedback inserts the user into the cell's user set (idempotent);
    unsatisfied feedback mutates nothing. Rewards are derived lazily from the
    current user sets, so subsequent reward computations see the change.
    """
    idx = model.cell_index(event.cell[0], event.cell[1])
    if event.satisfied:
        model.user_sets[idx].add(event.user_id)
    model.feedback_seq = max(model.feedback_seq, event.seq)
    return model


def maybe_retrain(model: GridModel, schedule: RetrainSchedule) -> bool:
    """Run an incremental training burst after every f-th applied event.

    Call once per applied event. Continues from the current Q-table over the
    current (possibly mutated) reward field; the burst seed is derived from
    the base training seed and the feedback sequence number, so a replayed
    event log reproduces the same Q-table.
    """
    if model.feedback_seq == 0 or model.feedback_seq % schedule.every_f_events != 0:
        return False
    base = model.train_config or TrainConfig()
    burst = TrainConfig(
        algorithm=base.algorithm,
        alpha=base.alpha,
        gamma=base.gamma,
        epsilon=base.epsilon,
        episodes=schedule.episodes,
        horizon=base.horizon,
        seed=base.seed + model.feedback_seq,
        window=base.window,
        reward=base.reward,
    )
    q, _ = train(model.env(), burst, initial_q=model.q_table())
    model.q = q.values
    logger.info("incremental retrain after event %d (%d episodes)", model.feedback_seq, schedule.episodes)
    return True


class FeedbackLog:
    """Append-only JSONL event log: {cell, satisfied, seq, ts, user} per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def next_seq(self) -> int:
        events = self.read_all() if self.path.exists() else []
        return events[-1].seq + 1 if events else 1

    def append(self, event: FeedbackEvent) -> None:
        line = canonical_dumps(
            {
                "seq": event.seq,
                "user": event.user_id,
                "cell": [event.cell[0], event.cell[1]],
                "satisfied": event.satisfied,
                "ts": event.ts,
            }
        )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    def read_all(self) -> list[FeedbackEvent]:
        if not self.path.exists():
            return []
        events = []
        with open(self.path, encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                obj = json.loads(raw)
                events.append(
                    FeedbackEvent(
                        user_id=obj["user"],
                        cell=(obj["cell"][0], obj["cell"][1]),
                        satisfied=obj["satisfied"],
                        seq=obj["seq"],
                        ts=obj.get("ts", 0),
                    )
                )
        return events

    def replay(self, model: GridModel, schedule: RetrainSchedule | None = None) -> int:
        """Re-apply events newer than the model's feedback_seq; returns count."""
        applied = 0
        for event in self.read_all():
            if event.seq <= model.feedback_seq:
                continue
            apply_feedback(model, event)
            if schedule is not None:
                maybe_retrain(model, schedule)
            applied += 1
        if applied:
            logger.info("replayed %d feedback events from %s", applied, self.path)
        return applied


def new_event(
    log: FeedbackLog, user_id: int, cell: tuple[int, int], satisfied: bool
) -> FeedbackEvent:
    """Build the next event in sequence with a wall-clock timestamp."""
    return FeedbackEvent(
        user_id=user_id,
        cell=cell,
        satisfied=satisfied,
        seq=log.next_seq(),
        ts=int(time.time()),
    )
