"""Command-line pipeline driver: one subcommand per stage plus `repro`."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bicluster as bc
from . import evaluation as ev
from .gridmap import map_biclusters_to_grid
from .ingest import (
    ColdStartSplit,
    binarize,
    make_cold_start,
    parse_movielens_100k,
    parse_movielens_1m,
    split_train_test,
)
from .online import RetrainSchedule
from .persistence import (
    GridModel,
    ModelValidationError,
    canonical_dumps,
    load_biclusters,
    load_grid,
    load_model,
    load_split,
    save_biclusters,
    save_curve,
    save_grid,
    save_model,
    save_split,
)
from .recommender import RecommendationRequest, walk_and_recommend
from .trainer import QTable, TrainConfig, train

logger = logging.getLogger(__name__)

POOL_SETTINGS = ((2, 2), (4, 4), (8, 8))


def _parse_records(dataset: str, path: str):
    if dataset == "ml-100k":
        return parse_movielens_100k(path)
    if dataset == "ml-1m":
        return parse_movielens_1m(path)
    raise ValueError(f"unknown dataset {dataset!r}")


def _algorithm_name(flag: str) -> str:
    return {"q": "q_learning", "q_learning": "q_learning", "sarsa": "sarsa"}[flag]


def cmd_ingest(args) -> int:
    records = _parse_records(args.dataset, args.ratings)
    train_records, test_records = split_train_test(records, args.train_fraction, args.seed)
    train_matrix = binarize(train_records, args.threshold, args.binarize_op)
    cold = make_cold_start(test_records, train_matrix, args.keep_fraction, args.threshold, args.seed + 1)
    save_split(train_records, cold.test_users, args.seed, args.out)
    print(
        f"wrote {args.out}: {len(train_records)} train records, "
        f"{len(cold.test_users)} evaluable test users"
    )
    return 0


def cmd_bicluster(args) -> int:
    train_records, _, _ = load_split(args.split)
    matrix = binarize(train_records, args.threshold, args.binarize_op)
    params = bc.BiclusterParams(
        algorithm=args.algorithm,
        min_rows=args.min_rows,
        min_cols=args.min_cols,
        max_enumerate=args.max_enumerate,
    )
    if args.algorithm == "bimax":
        found = bc.bimax_enumerate(matrix, params)
    else:
        found = bc.bibit_enumerate(matrix, params)
    raw = [_to_raw_ids(b, matrix) for b in found]
    if args.sample is not None:
        raw = bc.sample_biclusters(raw, args.sample, args.seed)
    save_biclusters(
        raw,
        {
            "algorithm": args.algorithm,
            "min_rows": args.min_rows,
            "min_cols": args.min_cols,
            "max_enumerate": args.max_enumerate,
            "sample": args.sample,
            "seed": args.seed,
        },
        args.out,
    )
    print(f"wrote {args.out}: {len(raw)} biclusters")
    return 0


def _to_raw_ids(b: bc.Bicluster, matrix) -> bc.Bicluster:
    return bc.Bicluster(
        frozenset(matrix.user_ids[u] for u in b.users),
        frozenset(matrix.item_ids[i] for i in b.items),
    )


def cmd_map(args) -> int:
    biclusters, _ = load_biclusters(args.biclusters)
    if len(biclusters) != args.n * args.n:
        raise ValueError(
            f"grid side n={args.n} needs exactly {args.n * args.n} biclusters, "
            f"got {len(biclusters)} (sample with the bicluster subcommand first)"
        )
    assignment = map_biclusters_to_grid(biclusters, args.n)
    save_grid(assignment, biclusters, args.out)
    print(f"wrote {args.out}: {args.n}x{args.n} grid")
    return 0


def cmd_train(args) -> int:
    n, user_sets, item_sets = load_grid(args.grid)
    train_records, _, _ = load_split(args.split)
    matrix = binarize(train_records, args.threshold, args.binarize_op)
    config = TrainConfig(
        algorithm=_algorithm_name(args.algorithm),
        alpha=args.alpha,
        gamma=args.gamma,
        epsilon=args.epsilon,
        episodes=args.episodes,
        horizon=args.horizon,
        seed=args.seed,
        window=args.window,
        reward=args.reward,
    )
    model = GridModel(
        n=n,
        user_sets=user_sets,
        item_sets=item_sets,
        q=QTable.initial(n).values,
        item_popularity=matrix.item_counts(),
        train_config=config,
        seeds={"train": args.seed},
    )
    q, curve = train(model.env(), config)
    model.q = q.values
    save_model(model, args.out)
    if args.curve:
        save_curve(curve, args.curve)
    final = curve.window_avg[-1] if curve.window_avg else float("nan")
    print(f"wrote {args.out}: {config.algorithm}, final windowed return {final:.4f}")
    return 0


def cmd_recommend(args) -> int:
    model = load_model(args.model)
    profile = frozenset(int(x) for x in args.profile.split(",") if x.strip())
    request = RecommendationRequest(
        profile=profile,
        n=args.n,
        k=args.k,
        epsilon=args.epsilon,
        max_steps=args.max_steps,
        seed=args.seed,
    )
    rec = walk_and_recommend(model, request)
    print(
        canonical_dumps(
            {
                "items": [
                    {
                        "item": it.item_id,
                        "cell": [it.explanation.cell[0], it.explanation.cell[1]],
                        "users": it.explanation.user_set_size,
                        "items": it.explanation.item_set_size,
                    }
                    for it in rec.items
                ],
                "trace": [[r, c] for r, c in rec.trace],
            }
        )
    )
    return 0


def cmd_evaluate(args) -> int:
    train_records, holdouts, _ = load_split(args.split)
    matrix = binarize(train_records, args.threshold, args.binarize_op)
    model = load_model(args.model)
    config = ev.EvalConfig(
        n=args.n,
        k=args.k,
        epsilon=args.epsilon,
        seed=args.seed,
        neighbors=args.neighbors,
        similar_cap=args.similar_cap,
        max_steps=args.max_steps,
        dataset=args.dataset,
    )
    report = ev.evaluate_cold_start(ColdStartSplit(matrix, holdouts), model, config)
    Path(args.out).write_text(canonical_dumps(report.to_json_obj()), encoding="utf-8")
    _print_report(report)
    return 0


def _print_report(report: ev.EvalReport) -> None:
    print(f"P@{report.n} / R@{report.n} over {report.users_evaluated} users:")
    for algo in ev.ALGORITHMS:
        m = report.metrics[algo]
        print(f"  {algo:15s} {m['precision_at_n']:.3f}  {m['recall_at_n']:.3f}")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        args.model,
        feedback_log_path=args.feedback_log,
        snapshot_every=args.snapshot_every,
        retrain_schedule=RetrainSchedule(args.retrain_every, args.retrain_episodes),
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_bicluster_pool(matrix, max_enumerate: int) -> list[bc.Bicluster]:
    """Union of bimax and bibit runs over the size-threshold grid, deduplicated."""
    pool: dict[tuple, bc.Bicluster] = {}
    for algorithm in ("bimax", "bibit"):
        for min_rows, min_cols in POOL_SETTINGS:
            params = bc.BiclusterParams(
                algorithm=algorithm,
                min_rows=min_rows,
                min_cols=min_cols,
                max_enumerate=max_enumerate,
            )
            if algorithm == "bimax":
                found = bc.bimax_enumerate(matrix, params)
            else:
                found = bc.bibit_enumerate(matrix, params)
            logger.info(
                "%s min %dx%d: %d biclusters", algorithm, min_rows, min_cols, len(found)
            )
            for b in found:
                key = (tuple(sorted(b.users)), tuple(sorted(b.items)))
                pool.setdefault(key, b)
    return list(pool.values())


def cmd_repro(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = args.n if args.n is not None else (20 if args.dataset == "ml-100k" else 30)
    seed = args.seed

    records = _parse_records(args.dataset, args.ratings)
    train_records, test_records = split_train_test(records, args.train_fraction, seed)
    matrix = binarize(train_records, args.threshold, args.binarize_op)
    cold = make_cold_start(test_records, matrix, args.keep_fraction, args.threshold, seed + 1)
    save_split(train_records, cold.test_users, seed, outdir / "split.json")

    pool = build_bicluster_pool(matrix, args.max_enumerate)
    sampled_dense = bc.sample_biclusters(
        sorted(pool, key=bc.Bicluster.sort_key), n * n, seed + 2
    )
    sampled = [_to_raw_ids(b, matrix) for b in sampled_dense]
    save_biclusters(
        sampled,
        {"pool": len(pool), "n": n, "seed": seed + 2, "max_enumerate": args.max_enumerate},
        outdir / "biclusters.json",
    )

    assignment = map_biclusters_to_grid(sampled, n)
    save_grid(assignment, sampled, outdir / "grid.json")

    config = TrainConfig(
        algorithm=_algorithm_name(args.algorithm),
        alpha=args.alpha,
        gamma=args.gamma,
        epsilon=args.epsilon,
        episodes=args.episodes,
        horizon=args.horizon,
        seed=seed + 3,
        window=args.window,
        reward=args.reward,
    )
    model = GridModel.fresh(
        assignment,
        sampled,
        matrix.item_counts(),
        seeds={"split": seed, "cold_start": seed + 1, "sample": seed + 2, "train": seed + 3, "evaluate": seed + 4},
    )
    model.train_config = config
    q, curve = train(model.env(), config)
    model.q = q.values
    save_model(model, outdir / "model.json")
    save_curve(curve, outdir / "curve.csv")

    eval_config = ev.EvalConfig(
        n=args.eval_n,
        k=args.k,
        epsilon=args.rec_epsilon,
        seed=seed + 4,
        neighbors=args.neighbors,
        similar_cap=args.similar_cap,
        max_steps=args.max_steps,
        dataset=args.dataset,
    )
    report = ev.evaluate_cold_start(cold, model, eval_config)
    (outdir / "report.json").write_text(canonical_dumps(report.to_json_obj()), encoding="utf-8")
    _print_report(report)
    print(f"artifacts in {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridrec",
        description="Gridworld RL recommender over binary-matrix biclusters",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("ingest", formatter_class=fmt, help="parse ratings, split, cold-start mask")
    p.add_argument("--dataset", choices=["ml-100k", "ml-1m"], default="ml-100k")
    p.add_argument("--ratings", required=True, help="path to u.data / ratings.dat")
    p.add_argument("--train-fraction", type=float, default=0.8, help="per-user train share")
    p.add_argument("--keep-fraction", type=float, default=0.1, help="observed share of test positives")
    p.add_argument("--threshold", type=int, default=3, help="binarization rating cutoff")
    p.add_argument("--binarize-op", choices=["ge", "gt"], default="ge", help="positive iff rating >= or > threshold")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="split.json")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("bicluster", formatter_class=fmt, help="enumerate (and optionally sample) biclusters")
    p.add_argument("--split", required=True, help="split.json from ingest")
    p.add_argument("--algorithm", choices=["bimax", "bibit"], default="bimax")
    p.add_argument("--min-rows", type=int, default=2)
    p.add_argument("--min-cols", type=int, default=2)
    p.add_argument("--max-enumerate", type=int, default=100_000)
    p.add_argument("--sample", type=int, default=None, help="sample this many biclusters (e.g. n^2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--binarize-op", choices=["ge", "gt"], default="ge")
    p.add_argument("--out", default="biclusters.json")
    p.set_defaults(func=cmd_bicluster)

    p = sub.add_parser("map", formatter_class=fmt, help="embed biclusters and assign them to the grid")
    p.add_argument("--n", type=int, required=True, help="grid side length")
    p.add_argument("--biclusters", required=True, help="biclusters.json with exactly n^2 entries")
    p.add_argument("--out", default="grid.json")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("train", formatter_class=fmt, help="learn the Q-table on a mapped grid")
    p.add_argument("--grid", required=True, help="grid.json from map")
    p.add_argument("--split", required=True, help="split.json (for item popularity)")
    p.add_argument("--algorithm", choices=["q", "q_learning", "sarsa"], default="q")
    p.add_argument("--alpha", type=float, default=0.1, help="learning rate")
    p.add_argument("--gamma", type=float, default=0.9, help="discount factor")
    p.add_argument("--epsilon", type=float, default=0.1, help="exploration rate")
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--horizon", type=int, default=50, help="steps per episode")
    p.add_argument("--window", type=int, default=100, help="learning-curve window")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--binarize-op", choices=["ge", "gt"], default="ge")
    p.add_argument("--reward", choices=["similarity", "distance"], default="similarity",
                   help="adjacent-state reward: user-set Jaccard similarity or 1 - similarity")
    p.add_argument("--out", default="model.json")
    p.add_argument("--curve", default=None, help="optional curve.csv path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recommend", formatter_class=fmt, help="top-N recommendations for a profile")
    p.add_argument("--model", required=True)
    p.add_argument("--profile", required=True, help="comma-separated item ids, e.g. '12,55,301'")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--k", type=int, default=3, help="candidate start states")
    p.add_argument("--epsilon", type=float, default=0.1, help="walk exploration rate")
    p.add_argument("--max-steps", type=int, default=100, help="per-walk move budget")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", formatter_class=fmt, help="cold-start P@N / R@N for all algorithms")
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--neighbors", type=int, default=50, help="user-CF neighborhood size")
    p.add_argument("--similar-cap", type=int, default=50, help="item-CF neighbor cap")
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--binarize-op", choices=["ge", "gt"], default="ge")
    p.add_argument("--dataset", default="", help="label recorded in the report")
    p.add_argument("--out", default="report.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", formatter_class=fmt, help="HTTP service for recommend/feedback")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--feedback-log", default=None, help="JSONL event log (default: alongside the model)")
    p.add_argument("--snapshot-every", type=int, default=100, help="save the model every this many events")
    p.add_argument("--retrain-every", type=int, default=10, help="incremental retrain period in events")
    p.add_argument("--retrain-episodes", type=int, default=100)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("repro", formatter_class=fmt, help="full pipeline with fixed seeds")
    p.add_argument("--dataset", choices=["ml-100k", "ml-1m"], default="ml-100k")
    p.add_argument("--ratings", required=True, help="path to u.data / ratings.dat")
    p.add_argument("--n", type=int, default=None, help="grid side (default 20 for ml-100k, 30 for ml-1m)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--outdir", default="out")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--keep-fraction", type=float, default=0.1)
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--binarize-op", choices=["ge", "gt"], default="ge")
    p.add_argument("--max-enumerate", type=int, default=20_000, help="cap per (algorithm, thresholds) pool run")
    p.add_argument("--algorithm", choices=["q", "q_learning", "sarsa"], default="q")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--epsilon", type=float, default=0.1, help="training exploration rate")
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--reward", choices=["similarity", "distance"], default="similarity",
                   help="adjacent-state reward: user-set Jaccard similarity or 1 - similarity")
    p.add_argument("--eval-n", type=int, default=30, help="top-N size for evaluation")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--rec-epsilon", type=float, default=0.1, help="walk exploration during evaluation")
    p.add_argument("--max-steps", type=int, default=100)
    p.add_argument("--neighbors", type=int, default=50)
    p.add_argument("--similar-cap", type=int, default=50)
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, ModelValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
