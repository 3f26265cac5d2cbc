"""Rating-file parsing, binarization, and train/test / cold-start splitting."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

logger = logging.getLogger(__name__)


class RatingRecord(NamedTuple):
    user_id: int
    item_id: int
    rating: int
    timestamp: int


@dataclass
class BinaryMatrix:
    """Binarized user-item interactions.

    Rows are Python ints used as bit vectors: bit ``j`` of ``rows[u]`` is set
    iff dense user ``u`` holds dense item ``j``. ``user_ids``/``item_ids`` map
    dense indices back to raw ids; ``user_index``/``item_index`` invert them.
    """

    n_users: int
    n_items: int
    rows: list[int]
    user_ids: list[int]
    item_ids: list[int]
    user_index: dict[int, int] = field(repr=False)
    item_index: dict[int, int] = field(repr=False)

    def __post_init__(self) -> None:
        if self.n_users <= 0 or self.n_items <= 0:
            raise ValueError("matrix must have at least one user and one item")
        if len(self.rows) != self.n_users or len(self.user_ids) != self.n_users:
            raise ValueError("row count does not match n_users")
        if len(self.item_ids) != self.n_items:
            raise ValueError("item id count does not match n_items")

    def entry(self, user: int, item: int) -> int:
        """0/1 entry at dense indices (user, item)."""
        return (self.rows[user] >> item) & 1

    def col_masks(self) -> list[int]:
        """Per-item bit vectors over users (bit u set iff entry (u, item) is 1)."""
        cols = [0] * self.n_items
        for u, row in enumerate(self.rows):
            bit = 1 << u
            m = row
            while m:
                j = (m & -m).bit_length() - 1
                cols[j] |= bit
                m &= m - 1
        return cols

    def item_counts(self) -> dict[int, int]:
        """Positive count per raw item id."""
        counts = {raw: 0 for raw in self.item_ids}
        for row in self.rows:
            m = row
            while m:
                j = (m & -m).bit_length() - 1
                counts[self.item_ids[j]] += 1
                m &= m - 1
        return counts

    def to_numpy(self):
        import numpy as np

        out = np.zeros((self.n_users, self.n_items), dtype=np.uint8)
        for u, row in enumerate(self.rows):
            m = row
            while m:
                j = (m & -m).bit_length() - 1
                out[u, j] = 1
                m &= m - 1
        return out


@dataclass(frozen=True)
class UserHoldout:
    user_id: int
    observed: frozenset[int]
    hidden: frozenset[int]


@dataclass
class ColdStartSplit:
    train: BinaryMatrix
    test_users: list[UserHoldout]


def _parse_ratings(path: str | Path, sep: str, fmt: str) -> list[RatingRecord]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"ratings file not found: {p}")
    records: list[RatingRecord] = []
    with open(p, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(sep)
            if len(parts) != 4:
                raise ValueError(
                    f"{p}:{lineno}: expected 4 {fmt}-separated fields, got {len(parts)}"
                )
            try:
                user, item, rating, ts = (int(x) for x in parts)
            except ValueError:
                raise ValueError(f"{p}:{lineno}: non-integer field in {line!r}") from None
            if user < 1 or item < 1:
                raise ValueError(f"{p}:{lineno}: ids must be positive")
            if not 1 <= rating <= 5:
                raise ValueError(f"{p}:{lineno}: rating {rating} outside [1, 5]")
            records.append(RatingRecord(user, item, rating, ts))
    if not records:
        raise ValueError(f"no records in {p}")
    logger.info(
        "parsed %s: %d records, %d users, %d items",
        p,
        len(records),
        len({r.user_id for r in records}),
        len({r.item_id for r in records}),
    )
    return records


def parse_movielens_100k(path: str | Path) -> list[RatingRecord]:
    """Parse a tab-separated `u.data`-style ratings file."""
    return _parse_ratings(path, "\t", "tab")


def parse_movielens_1m(path: str | Path) -> list[RatingRecord]:
    """Parse a `::`-separated `ratings.dat`-style ratings file."""
    return _parse_ratings(path, "::", "'::'")


def binarize(records: list[RatingRecord], threshold: int = 3, op: str = "ge") -> BinaryMatrix:
    """Build the binary interaction matrix from rating records.

    An entry is positive iff the (deduplicated, max-kept) rating passes the
    threshold: ``rating >= threshold`` for op="ge", strict for op="gt". Every
    user and item appearing in any record gets a dense index, even if all of
    its entries end up zero.
    """
    if not records:
        raise ValueError("cannot binarize an empty record list")
    if not 1 <= threshold <= 5:
        raise ValueError(f"threshold {threshold} outside [1, 5]")
    if op not in ("ge", "gt"):
        raise ValueError(f"unknown binarize op {op!r}")

    best: dict[tuple[int, int], int] = {}
    for r in records:
        key = (r.user_id, r.item_id)
        prev = best.get(key)
        if prev is None or r.rating > prev:
            best[key] = r.rating

    user_ids = sorted({u for u, _ in best})
    item_ids = sorted({i for _, i in best})
    user_index = {raw: k for k, raw in enumerate(user_ids)}
    item_index = {raw: k for k, raw in enumerate(item_ids)}

    rows = [0] * len(user_ids)
    for (u, i), rating in best.items():
        positive = rating >= threshold if op == "ge" else rating > threshold
        if positive:
            rows[user_index[u]] |= 1 << item_index[i]

    return BinaryMatrix(
        n_users=len(user_ids),
        n_items=len(item_ids),
        rows=rows,
        user_ids=user_ids,
        item_ids=item_ids,
        user_index=user_index,
        item_index=item_index,
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_train_test(
    records: list[RatingRecord], train_fraction: float = 0.8, seed: int = 0
) -> tuple[list[RatingRecord], list[RatingRecord]]:
    """User-stratified random split: each user's records split independently.

    Users with fewer than 2 records go entirely to train (logged). For the
    rest the train share is round(train_fraction * count), clamped so both
    sides stay non-empty.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction {train_fraction} outside (0, 1)")
    if not records:
        raise ValueError("cannot split an empty record list")

    by_user: dict[int, list[RatingRecord]] = {}
    for r in records:
        by_user.setdefault(r.user_id, []).append(r)

    rng = random.Random(seed)
    train: list[RatingRecord] = []
    test: list[RatingRecord] = []
    tiny_users = 0
    for user in sorted(by_user):
        recs = by_user[user]
        if len(recs) < 2:
            train.extend(recs)
            tiny_users += 1
            continue
        idx = list(range(len(recs)))
        rng.shuffle(idx)
        n_train = max(1, min(len(recs) - 1, _round_half_up(train_fraction * len(recs))))
        chosen = set(idx[:n_train])
        train.extend(recs[i] for i in range(len(recs)) if i in chosen)
        test.extend(recs[i] for i in range(len(recs)) if i not in chosen)
    if tiny_users:
        logger.warning("%d users with <2 records were placed entirely in train", tiny_users)
    return train, test


def make_cold_start(
    test_records: list[RatingRecord],
    train: BinaryMatrix,
    keep_fraction: float = 0.1,
    threshold: int = 3,
    seed: int = 0,
) -> ColdStartSplit:
    """Mask each test user's positives down to a small observed profile.

    Per user, round(keep_fraction * positives) items (at least one) stay
    observed; the rest become the hidden ground-truth set. Users without a
    positive test item, or whose hidden set would be empty, are dropped.
    """
    if not test_records:
        raise ValueError("cannot build a cold-start split from no test records")
    if not 0 < keep_fraction < 1:
        raise ValueError(f"keep_fraction {keep_fraction} outside (0, 1)")

    best: dict[int, dict[int, int]] = {}
    for r in test_records:
        per_user = best.setdefault(r.user_id, {})
        if r.rating > per_user.get(r.item_id, 0):
            per_user[r.item_id] = r.rating

    rng = random.Random(seed)
    holdouts: list[UserHoldout] = []
    dropped = 0
    for user in sorted(best):
        positives = sorted(i for i, rating in best[user].items() if rating >= threshold)
        if not positives:
            dropped += 1
            continue
        n_obs = max(1, _round_half_up(keep_fraction * len(positives)))
        observed = frozenset(rng.sample(positives, n_obs))
        hidden = frozenset(positives) - observed
        if not hidden:
            dropped += 1
            continue
        holdouts.append(UserHoldout(user, observed, hidden))
    if dropped:
        logger.warning("%d test users dropped from evaluation (no usable hidden items)", dropped)
    if not holdouts:
        raise ValueError("no evaluable test users after cold-start masking")
    return ColdStartSplit(train=train, test_users=holdouts)
