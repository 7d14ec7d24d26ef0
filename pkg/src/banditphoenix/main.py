"""
Command-line entry point for BanditPhoenix.
"""

import argparse
import logging
import sys
from typing import List, Optional

from .data import activity_profile, fetch_movielens
from .environment import make_env, write_env_spec
from .errors import PhoenixError
from .graph import fuzz_against_oracle
from .harness import (
    DatasetSpec,
    EnvironmentSpec,
    emit_csv,
    load_config,
    prepare_replay,
    run_experiment,
)
from .policies import POLICY_NAMES
from .utils.helpers import setup_logging

logger = logging.getLogger(__name__)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(
        args.config, policy=args.policy, seeds=args.seed, output=args.out
    )
    trace = run_experiment(cfg)
    path = emit_csv(trace, cfg.output_path)
    summary = trace.summary
    print(
        f"✅ {cfg.policy}: cumulative regret "
        f"{summary['cumulative_regret']:.3f}, ratio vs RAN "
        f"{summary['regret_ratio']} -> {path}"
    )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    report = fuzz_against_oracle(
        args.nodes,
        args.operations,
        seed=args.seed,
        delete_fraction=args.delete_fraction,
        density=args.density,
    )
    status = "✅" if report.ok else "❌"
    print(
        f"{status} {report.deletions} deletions, {report.queries} queries, "
        f"{report.mismatches} mismatches, {report.final_clusters} clusters "
        f"in {report.seconds:.2f}s"
    )
    return 0 if report.ok else 1


def cmd_make_env(args: argparse.Namespace) -> int:
    spec = EnvironmentSpec()
    if args.config is not None:
        spec = load_config(args.config).environment
    for name in (
        "users",
        "clusters",
        "dimension",
        "gamma",
        "sigma",
        "context_size",
        "arrivals",
        "power_law_exponent",
        "item_pool",
        "seed",
    ):
        value = getattr(args, name)
        if value is not None:
            setattr(spec, name, value)

    env = make_env(
        n=spec.users,
        m=spec.clusters,
        d=spec.dimension,
        gamma=spec.gamma,
        sigma=spec.sigma,
        cluster_sizes=spec.cluster_sizes,
        seed=spec.seed,
        context_size=spec.context_size,
        arrivals=spec.arrivals,
        power_law_exponent=spec.power_law_exponent,
        item_pool=spec.item_pool,
    )
    path = write_env_spec(env, args.out)
    diagnostics = env.diagnostics(samples=args.samples, seed=spec.seed)
    print(
        f"🆕 Environment with {env.n_users} users in {env.m} clusters "
        f"-> {path} (min eigenvalue {diagnostics.min_eigenvalue:.4f}, "
        f"cluster sizes {list(diagnostics.cluster_sizes)})"
    )
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    ratings, items = args.ratings, args.items
    if args.download is not None:
        ratings_path, items_path = fetch_movielens(args.download)
        ratings = ratings or str(ratings_path)
        items = items or str(items_path)
    if ratings is None:
        print("❌ ingest needs --ratings or --download", file=sys.stderr)
        return 2

    spec = DatasetSpec(
        ratings=ratings,
        items=items,
        features=args.features,
        cache=args.cache,
        context_size=args.context_size,
        variance_fraction=args.variance_fraction,
        seed=args.seed,
        max_rounds=args.max_rounds,
    )
    data = prepare_replay(spec)
    source = "📁 cache" if data.from_cache else "🆕 ingest"
    print(
        f"{source}: {len(data.rounds)} rounds, {len(data.features)} items, "
        f"d={data.features.dimension}"
    )
    if data.log is not None:
        profile = activity_profile(data.log)
        print(
            f"   {len(data.log)} events from {data.log.n_users} users; "
            f"top 10% of users produce {profile.top_decile_share:.1%}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditphoenix",
        description="Clustering-of-bandits simulator",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Debug logging"
    )
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="Tune, run and write a CSV trace")
    run.add_argument("config", help="TOML experiment file")
    run.add_argument("--policy", choices=POLICY_NAMES)
    run.add_argument(
        "--seed", type=int, action="append", help="Run seed (repeatable)"
    )
    run.add_argument("--out", help="CSV output path")
    run.set_defaults(handler=cmd_run)

    bench = sub.add_parser(
        "bench-connectivity", help="Fuzz the user graph against BFS"
    )
    bench.add_argument("--nodes", type=int, default=200)
    bench.add_argument("--operations", type=int, default=10_000)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--delete-fraction", type=float, default=0.5)
    bench.add_argument("--density", type=float, default=3.0)
    bench.set_defaults(handler=cmd_bench)

    env = sub.add_parser("make-env", help="Write a synthetic environment")
    env.add_argument("--out", required=True, help="JSON output path")
    env.add_argument("--config", help="Take [environment] from this file")
    env.add_argument("--users", type=int)
    env.add_argument("--clusters", type=int)
    env.add_argument("--dimension", type=int)
    env.add_argument("--gamma", type=float)
    env.add_argument("--sigma", type=float)
    env.add_argument("--context-size", type=int)
    env.add_argument("--arrivals", choices=("uniform", "power-law"))
    env.add_argument("--power-law-exponent", type=float)
    env.add_argument("--item-pool", type=int)
    env.add_argument("--seed", type=int)
    env.add_argument("--samples", type=int, default=100_000)
    env.set_defaults(handler=cmd_make_env)

    ingest = sub.add_parser("ingest", help="Build and cache replay rounds")
    ingest.add_argument("--ratings", help="u.data style rating log")
    ingest.add_argument("--items", help="u.item style item file")
    ingest.add_argument("--features", help="CSV of raw item features")
    ingest.add_argument("--download", help="Fetch MovieLens 100k here")
    ingest.add_argument("--cache", required=True, help="sqlite cache path")
    ingest.add_argument("--context-size", type=int, default=25)
    ingest.add_argument("--variance-fraction", type=float, default=0.95)
    ingest.add_argument("--seed", type=int, default=0)
    ingest.add_argument("--max-rounds", type=int)
    ingest.set_defaults(handler=cmd_ingest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2

    setup_logging(args.verbose)
    try:
        return args.handler(args)
    except (PhoenixError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
