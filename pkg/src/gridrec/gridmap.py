"""Embed sampled biclusters in 2D and assign them to grid cells."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bicluster import Bicluster


@dataclass
class GridAssignment:
    """Bijection from bicluster index to grid cell for an n x n grid."""

    n: int
    cell_of: list[tuple[int, int]]

    def __post_init__(self) -> None:
        if len(self.cell_of) != self.n * self.n:
            raise ValueError("assignment must place exactly n^2 biclusters")
        if len(set(self.cell_of)) != len(self.cell_of):
            raise ValueError("assignment is not a bijection")
        for r, c in self.cell_of:
            if not (0 <= r < self.n and 0 <= c < self.n):
                raise ValueError(f"cell ({r}, {c}) out of bounds for n={self.n}")

    def bicluster_at(self) -> dict[tuple[int, int], int]:
        return {cell: idx for idx, cell in enumerate(self.cell_of)}


def user_jaccard_distance_matrix(biclusters: list[Bicluster]) -> np.ndarray:
    """Pairwise 1 - |Ui n Uj| / |Ui u Uj| over the biclusters' user sets."""
    m = len(biclusters)
    masks = []
    for b in biclusters:
        if not b.users:
            raise ValueError("bicluster with empty user set")
        mask = 0
        for u in b.users:
            mask |= 1 << u
        masks.append(mask)

    d = np.zeros((m, m), dtype=np.float64)
    for i in range(m):
        mi = masks[i]
        for j in range(i + 1, m):
            mj = masks[j]
            inter = (mi & mj).bit_count()
            union = (mi | mj).bit_count()
            d[i, j] = d[j, i] = 1.0 - inter / union
    return d


def classical_mds_2d(distances: np.ndarray) -> np.ndarray:
    """Torgerson double-centering embedding into 2D.

    Coordinates come from the top-2 eigenpairs of -0.5 * J D^2 J (negative
    eigenvalues clamped to zero). Each axis is flipped so its
    largest-magnitude coordinate is positive; axes are ordered by descending
    eigenvalue, ties by index.
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.allclose(d, d.T, atol=1e-12, rtol=0.0):
        raise ValueError("distance matrix must be symmetric")
    if not np.allclose(np.diag(d), 0.0, atol=1e-12):
        raise ValueError("distance matrix must have a zero diagonal")

    m = d.shape[0]
    j = np.eye(m) - np.full((m, m), 1.0 / m)
    b = -0.5 * j @ (d**2) @ j
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(-evals, kind="stable")

    coords = np.zeros((m, 2), dtype=np.float64)
    for axis in range(min(2, m)):
        lam = evals[order[axis]]
        if lam <= 0.0:
            continue
        col = evecs[:, order[axis]] * np.sqrt(lam)
        peak = int(np.argmax(np.abs(col)))
        if col[peak] < 0:
            col = -col
        coords[:, axis] = col
    return coords


def greedy_assign(
    embedding: np.ndarray, n: int, areas: list[int] | None = None
) -> GridAssignment:
    """Scale the embedding into the grid box and claim nearest free cells.

    Points are processed in descending area order (ties by index; index order
    when no areas are given); each claims the nearest unoccupied cell by
    Euclidean distance, ties broken by row-major cell index.
    """
    pts = np.asarray(embedding, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("embedding must be an (m, 2) array")
    if pts.shape[0] != n * n:
        raise ValueError(f"need exactly {n * n} points for an n={n} grid, got {pts.shape[0]}")
    if areas is not None and len(areas) != n * n:
        raise ValueError("areas length must match the number of points")

    scaled = np.empty_like(pts)
    for axis in range(2):
        lo, hi = pts[:, axis].min(), pts[:, axis].max()
        if hi > lo:
            scaled[:, axis] = (pts[:, axis] - lo) / (hi - lo) * (n - 1)
        else:
            scaled[:, axis] = (n - 1) / 2.0

    if areas is None:
        order = list(range(n * n))
    else:
        order = sorted(range(n * n), key=lambda i: (-areas[i], i))

    occupied = [False] * (n * n)
    cell_of: list[tuple[int, int] | None] = [None] * (n * n)
    for idx in order:
        y, x = scaled[idx, 0], scaled[idx, 1]
        best = -1
        best_d = float("inf")
        for flat in range(n * n):
            if occupied[flat]:
                continue
            r, c = divmod(flat, n)
            dist = (r - y) ** 2 + (c - x) ** 2
            if dist < best_d:
                best_d = dist
                best = flat
        occupied[best] = True
        cell_of[idx] = divmod(best, n)
    return GridAssignment(n=n, cell_of=[cell for cell in cell_of if cell is not None])


def map_biclusters_to_grid(biclusters: list[Bicluster], n: int) -> GridAssignment:
    """Full mapping pipeline: user-set distances, MDS, greedy assignment."""
    distances = user_jaccard_distance_matrix(biclusters)
    embedding = classical_mds_2d(distances)
    areas = [b.area() for b in biclusters]
    return greedy_assign(embedding, n, areas)
