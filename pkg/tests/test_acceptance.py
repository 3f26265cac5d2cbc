"""Acceptance gate: one test per release criterion, each printing a PASS line.

The MovieLens-dependent criteria locate the real dataset via the
GRIDREC_ML100K environment variable or data/ml-100k/u.data and skip with an
explicit reason when it is absent (this sandbox has no network beyond package
mirrors). Everything else runs self-contained.
"""

import json
import math
import random
import statistics
import time

import numpy as np
import pytest

from gridrec.bicluster import (
    BiclusterParams,
    bibit_enumerate,
    bimax_enumerate,
    brute_force_maximal_biclusters,
    sample_biclusters,
    verify_all_ones,
)
from gridrec.cli import _to_raw_ids, build_bicluster_pool, main
from gridrec.evaluation import precision_at_n, recall_at_n
from gridrec.gridmap import map_biclusters_to_grid
from gridrec.ingest import binarize, parse_movielens_100k, split_train_test
from gridrec.mdp import GridEnv
from gridrec.online import FeedbackEvent, apply_feedback
from gridrec.persistence import GridModel, ModelValidationError, load_model, save_model
from gridrec.trainer import QTable, TrainConfig, train, value_iteration_oracle

from test_bicluster import matrix_from_strings
from test_persistence import corruptions, sample_model

RESULTS: list[str] = []


def report(criterion: str, detail: str) -> None:
    line = f"[PASS] {criterion}: {detail}"
    RESULTS.append(line)
    print(line)


def random_matrix(rng, side, density):
    rows = [
        "".join("1" if rng.random() < density else "0" for _ in range(side))
        for _ in range(side)
    ]
    return matrix_from_strings(rows)


class TestBiclusterOracleEquivalence:
    def test_bimax_equals_oracle_on_200_matrices(self):
        t0 = time.time()
        rng = random.Random(20_25)
        checked = 0
        sides_densities = [(s, d) for s in (8, 12) for d in (0.1, 0.3, 0.5)]
        while checked < 200:
            side, density = sides_densities[checked % len(sides_densities)]
            m = random_matrix(rng, side, density)
            params = BiclusterParams("bimax", 2, 2, 10**6)
            got = set(bimax_enumerate(m, params))
            want = set(brute_force_maximal_biclusters(m, params))
            assert got == want, f"bimax != oracle on {side}x{side} density {density}"
            if m.n_users >= 2:
                for b in bibit_enumerate(m, BiclusterParams("bibit", 1, 1, 10**6)):
                    assert verify_all_ones(m, b)
            checked += 1
        elapsed = time.time() - t0
        assert elapsed < 60, f"oracle equivalence took {elapsed:.1f}s (budget 60s)"
        report(
            "bicluster oracle equivalence",
            f"200 matrices (8x8/12x12, densities .1/.3/.5) in {elapsed:.1f}s",
        )


def oracle_env(n: int, seed: int) -> GridEnv:
    """Hand-designed grid: random small user sets with a unique optimal policy.

    Seeds below were screened so the converged optimal Q has an action gap
    over 1e-3 at every state, keeping the trained-policy comparison exact.
    """
    rng = random.Random(seed)
    universe = list(range(1, 40))
    user_sets = []
    item_sets = []
    for idx in range(n * n):
        size = rng.randint(2, 8)
        user_sets.append(set(rng.sample(universe, size)))
        item_sets.append({1000 + idx})
    return GridEnv(n, user_sets, item_sets)


ORACLE_GRID_SEEDS = {2: 0, 3: 0, 4: 0, 5: 1, 6: 0}


class TestRlOracle:
    def test_trained_policy_matches_value_iteration(self):
        t0 = time.time()
        for n, seed in ORACLE_GRID_SEEDS.items():
            env = oracle_env(n, seed)
            oracle = value_iteration_oracle(env, gamma=0.9)
            q, _ = train(
                env,
                TrainConfig(
                    algorithm="q_learning",
                    alpha=0.1,
                    gamma=0.9,
                    epsilon=0.1,
                    episodes=50_000,
                    horizon=50,
                    seed=seed + 1000,
                ),
            )
            assert np.array_equal(q.greedy_policy(), oracle), f"policy mismatch on {n}x{n}"
        elapsed = time.time() - t0
        assert elapsed < 120, f"RL oracle took {elapsed:.1f}s (budget 120s)"
        report("RL oracle", f"5 grids (2x2..6x6), exact policy match in {elapsed:.1f}s")


@pytest.fixture(scope="session")
def ml100k_grid(ml100k_path):
    """One grid built from the real dataset, shared by the RL parity check."""
    records = parse_movielens_100k(ml100k_path)
    train_records, _ = split_train_test(records, 0.8, seed=7)
    matrix = binarize(train_records, 3)
    pool = build_bicluster_pool(matrix, 20_000)
    from gridrec.bicluster import Bicluster

    sampled = [
        _to_raw_ids(b, matrix)
        for b in sample_biclusters(sorted(pool, key=Bicluster.sort_key), 400, seed=9)
    ]
    assignment = map_biclusters_to_grid(sampled, 20)
    model = GridModel.fresh(assignment, sampled, matrix.item_counts())
    return model.env()


class TestQLearningSarsaParity:
    def test_final_windowed_returns_close(self, ml100k_grid):
        t0 = time.time()
        finals = {"q_learning": [], "sarsa": []}
        for algorithm in finals:
            for seed in (11, 12, 13):
                _, curve = train(
                    ml100k_grid,
                    TrainConfig(
                        algorithm=algorithm,
                        alpha=0.1,
                        gamma=0.9,
                        epsilon=0.1,
                        episodes=10_000,
                        horizon=50,
                        seed=seed,
                        window=100,
                    ),
                )
                finals[algorithm].append(curve.window_avg[-1])
                quarter = len(curve.returns) // 4
                first_q = statistics.mean(curve.returns[:quarter])
                last_q = statistics.mean(curve.returns[-quarter:])
                assert last_q > first_q, f"{algorithm} seed {seed} did not improve"
        mean_q = statistics.mean(finals["q_learning"])
        mean_s = statistics.mean(finals["sarsa"])
        rel = abs(mean_q - mean_s) / max(mean_q, mean_s)
        elapsed = time.time() - t0
        assert rel < 0.10, f"final returns differ by {rel:.1%}"
        assert elapsed < 600, f"parity check took {elapsed:.1f}s (budget 600s)"
        report(
            "Q-learning vs SARSA parity",
            f"final windowed returns {mean_q:.2f} vs {mean_s:.2f} ({rel:.1%} rel) in {elapsed:.0f}s",
        )


@pytest.fixture(scope="session")
def ml100k_repro_runs(ml100k_path, tmp_path_factory):
    """Full `repro` pipeline on the real dataset for three seeds."""
    runs = {}
    base = tmp_path_factory.mktemp("repro")
    for seed in (7, 8, 9):
        outdir = base / f"seed{seed}"
        code = main(
            [
                "repro",
                "--dataset",
                "ml-100k",
                "--ratings",
                str(ml100k_path),
                "--n",
                "20",
                "--seed",
                str(seed),
                "--outdir",
                str(outdir),
            ]
        )
        assert code == 0
        runs[seed] = outdir
    return runs


class TestColdStartOrdering:
    # reference ML-100k results this setup aims to reproduce in ordering:
    # proposed 0.246/0.169, item 0.193/0.132, user 0.187/0.129, global 0.153/0.102
    def test_table_ordering_and_band(self, ml100k_repro_runs):
        t0 = time.time()
        per_algo: dict[str, dict[str, list[float]]] = {}
        for seed, outdir in ml100k_repro_runs.items():
            rep = json.loads((outdir / "report.json").read_text())
            for algo, vals in rep["metrics"].items():
                per_algo.setdefault(algo, {"p": [], "r": []})
                per_algo[algo]["p"].append(vals["precision_at_n"])
                per_algo[algo]["r"].append(vals["recall_at_n"])
        means = {
            algo: (statistics.mean(v["p"]), statistics.mean(v["r"]))
            for algo, v in per_algo.items()
        }
        order = ["proposed", "item_based", "user_based", "global_average"]
        for metric_idx, name in ((0, "P@30"), (1, "R@30")):
            vals = [means[a][metric_idx] for a in order]
            assert vals[0] > vals[1] > vals[2] > vals[3], f"{name} ordering violated: {dict(zip(order, vals))}"
        assert 0.15 <= means["proposed"][0] <= 0.35, f"proposed P@30 {means['proposed'][0]:.3f} outside sanity band"
        report(
            "cold-start ordering",
            "means P@30 "
            + ", ".join(f"{a}={means[a][0]:.3f}" for a in order)
            + f" (checked in {time.time() - t0:.0f}s + pipeline time)",
        )


class TestOnlineUpdateArithmetic:
    def test_exact_reward_shift(self):
        model = GridModel(
            n=2,
            user_sets=[{1, 2}, {2, 3}, {8, 9}, {9, 10}],
            item_sets=[{101}, {102}, {103}, {104}],
            q=QTable.initial(2).values,
            item_popularity={},
        )
        env = model.env()
        assert env.reward(0, 0, 0, 1) == 1 / 3
        apply_feedback(model, FeedbackEvent(7, (0, 0), True, seq=1))
        apply_feedback(model, FeedbackEvent(7, (0, 1), True, seq=2))
        assert env.reward(0, 0, 0, 1) == (1 + 1) / (3 + 1) == 0.5
        report("online-update arithmetic", "1/3 -> (1+1)/(3+1) = 0.5 exactly")


class TestMetricIdentities:
    def test_identity_over_1000_random_pairs(self):
        rng = random.Random(99)
        for _ in range(1_000):
            n = rng.randint(1, 60)
            rec = rng.sample(range(1, 300), rng.randint(0, 90))
            hidden = set(rng.sample(range(1, 300), rng.randint(1, 60)))
            hits = len(set(rec[:n]) & hidden)
            p = precision_at_n(rec, hidden, n)
            r = recall_at_n(rec, hidden, n)
            assert p == hits / n and r == hits / len(hidden)
            assert round(p * n) == hits == round(r * len(hidden))
            assert math.isclose(p * n, r * len(hidden), rel_tol=0, abs_tol=1e-9)
        report("metric identities", "P@N*N = R@N*|hidden| = hits over 1000 random pairs")


class TestReproDeterminism:
    def test_repro_twice_byte_identical_ml100k(self, ml100k_path, ml100k_repro_runs, tmp_path):
        rerun = tmp_path / "seed7-again"
        code = main(
            [
                "repro",
                "--dataset",
                "ml-100k",
                "--ratings",
                str(ml100k_path),
                "--n",
                "20",
                "--seed",
                "7",
                "--outdir",
                str(rerun),
            ]
        )
        assert code == 0
        first = ml100k_repro_runs[7]
        for name in ("model.json", "report.json"):
            assert (first / name).read_bytes() == (rerun / name).read_bytes()
        report("determinism (ml-100k)", "repro twice with seed 7: model.json and report.json byte-identical")

    def test_repro_twice_byte_identical_synthetic(self, synth_ratings_file, tmp_path):
        args = [
            "repro",
            "--ratings",
            str(synth_ratings_file),
            "--n",
            "6",
            "--seed",
            "7",
            "--episodes",
            "2000",
            "--max-enumerate",
            "4000",
        ]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--outdir", str(out1)]) == 0
        assert main(args + ["--outdir", str(out2)]) == 0
        for name in ("model.json", "report.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        report(
            "determinism (synthetic)",
            "repro twice with seed 7: model.json and report.json byte-identical",
        )


class TestPersistenceFuzz:
    def test_all_20_corruptions_rejected(self, tmp_path):
        rejected = 0
        for i, (name, (kind, mutate)) in enumerate(corruptions()):
            path = tmp_path / f"m{i}.json"
            save_model(sample_model(), path)
            if kind == "obj":
                obj = json.loads(path.read_text())
                mutate(obj)
                path.write_text(json.dumps(obj))
            else:
                path.write_text(mutate(path.read_text()))
            with pytest.raises(ModelValidationError) as exc:
                load_model(path)
            assert str(exc.value), f"{name}: missing invariant message"
            rejected += 1
        assert rejected == 20
        report("persistence fuzz", "20/20 corrupted models rejected with named invariants")
