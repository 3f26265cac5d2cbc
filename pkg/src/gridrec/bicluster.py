"""All-ones bicluster enumeration over binary matrices.

Rows and columns are manipulated as Python-int bit vectors; AND/popcount are
the hot kernels throughout.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .ingest import BinaryMatrix

_ORACLE_MAX_SIDE = 16


@dataclass(frozen=True)
class Bicluster:
    """A (user set, item set) pair whose induced submatrix is all ones."""

    users: frozenset[int]
    items: frozenset[int]

    def __post_init__(self) -> None:
        if not self.users or not self.items:
            raise ValueError("bicluster user and item sets must be non-empty")

    def area(self) -> int:
        return len(self.users) * len(self.items)

    def sort_key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (tuple(sorted(self.items)), tuple(sorted(self.users)))


@dataclass
class BiclusterParams:
    algorithm: str = "bimax"
    min_rows: int = 2
    min_cols: int = 2
    max_enumerate: int = 100_000

    def __post_init__(self) -> None:
        if self.algorithm not in ("bimax", "bibit"):
            raise ValueError(f"unknown biclustering algorithm {self.algorithm!r}")
        if self.min_rows < 1 or self.min_cols < 1:
            raise ValueError("min_rows and min_cols must be >= 1")
        if self.max_enumerate < 1:
            raise ValueError("max_enumerate must be >= 1")


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        out.append((mask & -mask).bit_length() - 1)
        mask &= mask - 1
    return out


def _intent(extent: int, rows: list[int], full_items: int) -> int:
    acc = full_items
    m = extent
    while m and acc:
        r = (m & -m).bit_length() - 1
        acc &= rows[r]
        m &= m - 1
    return acc


def _make_bicluster(extent: int, intent: int) -> Bicluster:
    return Bicluster(frozenset(_bits(extent)), frozenset(_bits(intent)))


def bimax_enumerate(matrix: BinaryMatrix, params: BiclusterParams) -> list[Bicluster]:
    """Enumerate inclusion-maximal all-ones submatrices meeting size thresholds.

    The search is a close-by-one sweep over item sets: each candidate item is
    added in increasing index order, the user extent is intersected with the
    item's column, and the closure (common items of the extent) is kept only
    when it introduces no item below the one just added, which yields every
    maximal bicluster exactly once. Enumeration halts after
    ``params.max_enumerate`` emissions; the result is sorted lexicographically
    by item set, then user set.
    """
    rows = matrix.rows
    n_users, n_items = matrix.n_users, matrix.n_items
    cols = matrix.col_masks()
    full_items = (1 << n_items) - 1
    min_rows, min_cols, cap = params.min_rows, params.min_cols, params.max_enumerate

    found: list[tuple[int, int]] = []
    root_extent = (1 << n_users) - 1
    root_intent = _intent(root_extent, rows, full_items)
    stack: list[tuple[int, int, int]] = [(root_extent, root_intent, -1)]
    while stack and len(found) < cap:
        extent, intent, last = stack.pop()
        if extent.bit_count() >= min_rows and intent.bit_count() >= min_cols:
            found.append((extent, intent))
            if len(found) == cap:
                break
        children: list[tuple[int, int, int]] = []
        for j in range(last + 1, n_items):
            if (intent >> j) & 1:
                continue
            new_extent = extent & cols[j]
            if new_extent.bit_count() < min_rows:
                continue
            new_intent = _intent(new_extent, rows, full_items)
            low = (1 << j) - 1
            if (new_intent & low) != (intent & low):
                continue
            children.append((new_extent, new_intent, j))
        stack.extend(reversed(children))

    out = [_make_bicluster(e, i) for e, i in found]
    out.sort(key=Bicluster.sort_key)
    return out


def bibit_enumerate(matrix: BinaryMatrix, params: BiclusterParams) -> list[Bicluster]:
    """Enumerate biclusters from pairwise row AND patterns.

    For each unordered row pair the AND pattern, when wide enough and not seen
    before, is grown to every row containing it. Output order is the
    deterministic discovery order over row pairs.
    """
    rows = matrix.rows
    n_users = matrix.n_users
    if n_users < 2:
        raise ValueError("bibit needs at least 2 rows")
    min_rows, min_cols, cap = params.min_rows, params.min_cols, params.max_enumerate

    seen: set[int] = set()
    out: list[Bicluster] = []
    for i in range(n_users - 1):
        row_i = rows[i]
        for j in range(i + 1, n_users):
            pattern = row_i & rows[j]
            if pattern.bit_count() < min_cols or pattern in seen:
                continue
            seen.add(pattern)
            extent = 0
            for r, row in enumerate(rows):
                if row & pattern == pattern:
                    extent |= 1 << r
            if extent.bit_count() >= min_rows:
                out.append(_make_bicluster(extent, pattern))
                if len(out) == cap:
                    return out
    return out


def brute_force_maximal_biclusters(
    matrix: BinaryMatrix, params: BiclusterParams
) -> list[Bicluster]:
    """Exhaustive oracle: closure of every row subset, filtered by thresholds.

    Only valid for matrices up to 16x16.
    """
    if matrix.n_users > _ORACLE_MAX_SIDE or matrix.n_items > _ORACLE_MAX_SIDE:
        raise ValueError(f"brute-force oracle limited to {_ORACLE_MAX_SIDE}x{_ORACLE_MAX_SIDE}")
    rows = matrix.rows
    n_users = matrix.n_users
    full_items = (1 << matrix.n_items) - 1

    concepts: set[tuple[int, int]] = set()
    for subset in range(1, 1 << n_users):
        common = _intent(subset, rows, full_items)
        if common == 0:
            continue
        extent = 0
        for r, row in enumerate(rows):
            if row & common == common:
                extent |= 1 << r
        concepts.add((extent, common))

    out = [
        _make_bicluster(e, c)
        for e, c in concepts
        if e.bit_count() >= params.min_rows and c.bit_count() >= params.min_cols
    ]
    out.sort(key=Bicluster.sort_key)
    return out


def sample_biclusters(biclusters: list[Bicluster], count: int, seed: int) -> list[Bicluster]:
    """Uniform sample without replacement, returned in stable index order."""
    if count > len(biclusters):
        raise ValueError(
            f"cannot sample {count} biclusters from {len(biclusters)}; "
            "lower min_rows/min_cols or reduce the grid side n"
        )
    rng = random.Random(seed)
    picked = sorted(rng.sample(range(len(biclusters)), count))
    return [biclusters[i] for i in picked]


def verify_all_ones(matrix: BinaryMatrix, bicluster: Bicluster) -> bool:
    """Check that every (user, item) entry of the bicluster is 1."""
    return all(matrix.entry(u, i) for u in bicluster.users for i in bicluster.items)
