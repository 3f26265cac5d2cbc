"""Versioned serialization for grids, models, splits, curves, and biclusters.

All JSON artifacts are written in a canonical form (sorted keys, fixed float
formatting at 17 significant digits) so equal structures produce
byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bicluster import Bicluster
from .gridmap import GridAssignment
from .ingest import RatingRecord, UserHoldout
from .mdp import GridEnv, valid_actions
from .trainer import NEG_INF, LearningCurve, QTable, TrainConfig

SCHEMA_VERSION = 1


class ModelValidationError(ValueError):
    """Raised when a persisted artifact violates a structural invariant."""


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("non-finite float cannot be serialized canonically")
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def canonical_dumps(obj) -> str:
    """Deterministic JSON: sorted keys, minimal separators, .17g floats."""
    parts: list[str] = []
    _encode(obj, parts)
    return "".join(parts)


def _encode(obj, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(_fmt_float(obj))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for k, v in enumerate(obj):
            if k:
                parts.append(",")
            _encode(v, parts)
        parts.append("]")
    elif isinstance(obj, dict):
        parts.append("{")
        for k, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"canonical JSON keys must be strings, got {type(key)}")
            if k:
                parts.append(",")
            parts.append(json.dumps(key))
            parts.append(":")
            _encode(obj[key], parts)
        parts.append("}")
    else:
        raise TypeError(f"cannot canonically serialize {type(obj)}")


def _reject_constant(name: str):
    raise ModelValidationError(f"non-finite number {name!r} in JSON file")


def _loads(text: str, path: Path):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelValidationError(f"{path}: not valid JSON ({exc.msg})") from exc


@dataclass
class GridModel:
    """The persistent recommender artifact: grid cells, Q-table, and metadata.

    Cell user/item sets hold raw dataset ids and are mutable so online
    feedback can extend them in place.
    """

    n: int
    user_sets: list[set[int]]
    item_sets: list[set[int]]
    q: np.ndarray
    item_popularity: dict[int, int]
    train_config: TrainConfig | None = None
    seeds: dict[str, int] = field(default_factory=dict)
    feedback_seq: int = 0
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def fresh(
        cls,
        assignment: GridAssignment,
        biclusters: list[Bicluster],
        item_popularity: dict[int, int],
        seeds: dict[str, int] | None = None,
    ) -> GridModel:
        """Assemble an untrained model from a grid assignment over raw-id biclusters."""
        n = assignment.n
        user_sets: list[set[int] | None] = [None] * (n * n)
        item_sets: list[set[int] | None] = [None] * (n * n)
        for idx, (r, c) in enumerate(assignment.cell_of):
            user_sets[r * n + c] = set(biclusters[idx].users)
            item_sets[r * n + c] = set(biclusters[idx].items)
        return cls(
            n=n,
            user_sets=[s for s in user_sets if s is not None],
            item_sets=[s for s in item_sets if s is not None],
            q=QTable.initial(n).values,
            item_popularity=dict(item_popularity),
            seeds=dict(seeds or {}),
        )

    def env(self) -> GridEnv:
        """Environment view sharing this model's mutable cell sets."""
        mode = self.train_config.reward if self.train_config else "similarity"
        return GridEnv(self.n, self.user_sets, self.item_sets, reward_mode=mode)

    def q_table(self) -> QTable:
        return QTable(n=self.n, values=self.q)

    def cell_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.n and 0 <= col < self.n):
            raise ValueError(f"cell ({row}, {col}) out of bounds for n={self.n}")
        return row * self.n + col

    def all_items(self) -> set[int]:
        out: set[int] = set()
        for s in self.item_sets:
            out |= s
        return out

    def to_json_obj(self) -> dict:
        n = self.n
        cells = []
        q_rows = []
        for idx in range(n * n):
            r, c = divmod(idx, n)
            cells.append(
                {
                    "row": r,
                    "col": c,
                    "users": sorted(self.user_sets[idx]),
                    "items": sorted(self.item_sets[idx]),
                }
            )
            valid = valid_actions(r, c, n)
            q_rows.append(
                [
                    float(self.q[r, c, a]) if a in valid else None
                    for a in range(self.q.shape[2])
                ]
            )
        cfg = None
        if self.train_config is not None:
            tc = self.train_config
            cfg = {
                "algorithm": tc.algorithm,
                "alpha": tc.alpha,
                "gamma": tc.gamma,
                "epsilon": tc.epsilon,
                "episodes": tc.episodes,
                "horizon": tc.horizon,
                "seed": tc.seed,
                "window": tc.window,
                "reward": tc.reward,
            }
        return {
            "version": self.schema_version,
            "n": n,
            "cells": cells,
            "q": q_rows,
            "train_config": cfg,
            "item_popularity": {str(k): int(v) for k, v in self.item_popularity.items()},
            "seeds": {str(k): int(v) for k, v in self.seeds.items()},
            "feedback_seq": self.feedback_seq,
        }


def save_model(model: GridModel, path: str | Path) -> None:
    obj = model.to_json_obj()
    _validate_model_obj(obj, Path(path))
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def load_model(path: str | Path) -> GridModel:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"model file not found: {p}")
    obj = _loads(p.read_text(encoding="utf-8"), p)
    _validate_model_obj(obj, p)

    n = obj["n"]
    user_sets = [set(cell["users"]) for cell in obj["cells"]]
    item_sets = [set(cell["items"]) for cell in obj["cells"]]
    q = np.full((n, n, 4), NEG_INF, dtype=np.float64)
    for idx, q_row in enumerate(obj["q"]):
        r, c = divmod(idx, n)
        for a, v in enumerate(q_row):
            if v is not None:
                q[r, c, a] = float(v)
    cfg = obj["train_config"]
    train_config = TrainConfig(**cfg) if cfg is not None else None
    return GridModel(
        n=n,
        user_sets=user_sets,
        item_sets=item_sets,
        q=q,
        item_popularity={int(k): v for k, v in obj["item_popularity"].items()},
        train_config=train_config,
        seeds={k: v for k, v in obj["seeds"].items()},
        feedback_seq=obj["feedback_seq"],
        schema_version=obj["version"],
    )


def _fail(path: Path, invariant: str):
    raise ModelValidationError(f"{path}: {invariant}")


def _validate_model_obj(obj, path: Path) -> None:
    if not isinstance(obj, dict):
        _fail(path, "model document must be a JSON object")
    for key in ("version", "n", "cells", "q", "train_config", "item_popularity", "seeds", "feedback_seq"):
        if key not in obj:
            _fail(path, f"missing key {key!r}")
    if obj["version"] != SCHEMA_VERSION:
        _fail(path, f"unsupported schema version {obj['version']!r} (supported: {SCHEMA_VERSION})")
    n = obj["n"]
    if not isinstance(n, int) or n < 2:
        _fail(path, f"grid side n must be an integer >= 2, got {n!r}")
    cells = obj["cells"]
    if not isinstance(cells, list) or len(cells) != n * n:
        _fail(path, f"expected exactly {n * n} cells, got {len(cells) if isinstance(cells, list) else type(cells)}")
    for idx, cell in enumerate(cells):
        r, c = divmod(idx, n)
        if not isinstance(cell, dict) or cell.get("row") != r or cell.get("col") != c:
            _fail(path, f"cells must enumerate the grid in row-major order (index {idx} is not ({r}, {c}))")
        for kind in ("users", "items"):
            vals = cell.get(kind)
            if not isinstance(vals, list) or not vals:
                _fail(path, f"cell ({r}, {c}) has an empty or missing {kind} list")
            if not all(isinstance(v, int) for v in vals):
                _fail(path, f"cell ({r}, {c}) has non-integer {kind}")
            if len(set(vals)) != len(vals):
                _fail(path, f"cell ({r}, {c}) has duplicate {kind}")
    q_rows = obj["q"]
    if not isinstance(q_rows, list) or len(q_rows) != n * n:
        _fail(path, f"q table must have {n * n} rows")
    for idx, q_row in enumerate(q_rows):
        r, c = divmod(idx, n)
        if not isinstance(q_row, list) or len(q_row) != 4:
            _fail(path, f"q row for cell ({r}, {c}) must have 4 entries")
        valid = valid_actions(r, c, n)
        for a, v in enumerate(q_row):
            if a in valid:
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                    _fail(path, f"q value for cell ({r}, {c}) action {a} must be a finite number")
            elif v is not None:
                _fail(path, f"q value for cell ({r}, {c}) action {a} must be null (invalid action)")
    cfg = obj["train_config"]
    if cfg is not None:
        if not isinstance(cfg, dict):
            _fail(path, "train_config must be an object or null")
        try:
            TrainConfig(**cfg)
        except (TypeError, ValueError) as exc:
            _fail(path, f"invalid train_config: {exc}")
    pop = obj["item_popularity"]
    if not isinstance(pop, dict):
        _fail(path, "item_popularity must be an object")
    for k, v in pop.items():
        try:
            int(k)
        except ValueError:
            _fail(path, f"item_popularity key {k!r} is not an integer id")
        if not isinstance(v, int) or v < 0:
            _fail(path, f"item_popularity count for {k} must be a non-negative integer")
    if not isinstance(obj["seeds"], dict) or not all(
        isinstance(v, int) for v in obj["seeds"].values()
    ):
        _fail(path, "seeds must be an object with integer values")
    if not isinstance(obj["feedback_seq"], int) or obj["feedback_seq"] < 0:
        _fail(path, "feedback_seq must be a non-negative integer")


def save_biclusters(
    biclusters: list[Bicluster], params: dict, path: str | Path
) -> None:
    obj = {
        "version": SCHEMA_VERSION,
        "params": params,
        "biclusters": [
            {"users": sorted(b.users), "items": sorted(b.items)} for b in biclusters
        ],
    }
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def load_biclusters(path: str | Path) -> tuple[list[Bicluster], dict]:
    p = Path(path)
    obj = _loads(p.read_text(encoding="utf-8"), p)
    if obj.get("version") != SCHEMA_VERSION:
        raise ModelValidationError(f"{p}: unsupported schema version {obj.get('version')!r}")
    out = [
        Bicluster(frozenset(b["users"]), frozenset(b["items"])) for b in obj["biclusters"]
    ]
    return out, obj.get("params", {})


def save_grid(
    assignment: GridAssignment, biclusters: list[Bicluster], path: str | Path
) -> None:
    """Write the n x n cell layout with raw-id user/item sets, row-major."""
    n = assignment.n
    by_cell: list[Bicluster | None] = [None] * (n * n)
    for idx, (r, c) in enumerate(assignment.cell_of):
        by_cell[r * n + c] = biclusters[idx]
    cells = []
    for idx, b in enumerate(by_cell):
        r, c = divmod(idx, n)
        if b is None:
            raise ValueError(f"no bicluster assigned to cell ({r}, {c})")
        cells.append({"row": r, "col": c, "users": sorted(b.users), "items": sorted(b.items)})
    obj = {"version": SCHEMA_VERSION, "n": n, "cells": cells}
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def load_grid(path: str | Path) -> tuple[int, list[set[int]], list[set[int]]]:
    p = Path(path)
    obj = _loads(p.read_text(encoding="utf-8"), p)
    if obj.get("version") != SCHEMA_VERSION:
        raise ModelValidationError(f"{p}: unsupported schema version {obj.get('version')!r}")
    n = obj["n"]
    if not isinstance(n, int) or n < 1 or len(obj["cells"]) != n * n:
        raise ModelValidationError(f"{p}: cell count does not match n^2")
    user_sets: list[set[int]] = [set() for _ in range(n * n)]
    item_sets: list[set[int]] = [set() for _ in range(n * n)]
    seen = set()
    for cell in obj["cells"]:
        r, c = cell["row"], cell["col"]
        if not (0 <= r < n and 0 <= c < n) or (r, c) in seen:
            raise ModelValidationError(f"{p}: cell ({r}, {c}) out of bounds or duplicated")
        seen.add((r, c))
        user_sets[r * n + c] = set(cell["users"])
        item_sets[r * n + c] = set(cell["items"])
    return n, user_sets, item_sets


def save_split(
    train_records: list[RatingRecord],
    holdouts: list[UserHoldout],
    seed: int,
    path: str | Path,
) -> None:
    obj = {
        "version": SCHEMA_VERSION,
        "seed": seed,
        "train": [[r.user_id, r.item_id, r.rating, r.timestamp] for r in train_records],
        "test": [
            {
                "user": h.user_id,
                "observed": sorted(h.observed),
                "hidden": sorted(h.hidden),
            }
            for h in holdouts
        ],
    }
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def load_split(path: str | Path) -> tuple[list[RatingRecord], list[UserHoldout], int]:
    p = Path(path)
    obj = _loads(p.read_text(encoding="utf-8"), p)
    if obj.get("version") != SCHEMA_VERSION:
        raise ModelValidationError(f"{p}: unsupported schema version {obj.get('version')!r}")
    train = [RatingRecord(*row) for row in obj["train"]]
    holdouts = [
        UserHoldout(t["user"], frozenset(t["observed"]), frozenset(t["hidden"]))
        for t in obj["test"]
    ]
    return train, holdouts, obj["seed"]


def save_curve(curve: LearningCurve, path: str | Path) -> None:
    lines = ["episode,return,window_avg"]
    for ep, (r, w) in enumerate(zip(curve.returns, curve.window_avg)):
        lines.append(f"{ep},{_fmt_float(r)},{_fmt_float(w)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
