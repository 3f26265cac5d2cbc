import os
from pathlib import Path

import pytest

from synth import synth_records, write_ml100k_format

ML100K_ENV = "GRIDREC_ML100K"


def find_ml100k() -> Path | None:
    """Locate the real MovieLens-100k u.data file, if present."""
    candidates = []
    if os.environ.get(ML100K_ENV):
        candidates.append(Path(os.environ[ML100K_ENV]))
    here = Path(__file__).resolve().parent.parent
    candidates += [
        here / "data" / "ml-100k" / "u.data",
        Path("data/ml-100k/u.data"),
    ]
    for c in candidates:
        if c.is_file():
            return c
    return None


@pytest.fixture(scope="session")
def ml100k_path():
    path = find_ml100k()
    if path is None:
        pytest.skip(
            "MovieLens-100k not available in this environment "
            f"(set {ML100K_ENV}=/path/to/u.data or place data/ml-100k/u.data)"
        )
    return path


@pytest.fixture(scope="session")
def synth_ratings_file(tmp_path_factory):
    """A small MovieLens-format synthetic ratings file (200 users, 400 items)."""
    records = synth_records(n_users=200, n_items=400, n_ratings=12_000, seed=0)
    return write_ml100k_format(records, tmp_path_factory.mktemp("synth") / "u.data")
