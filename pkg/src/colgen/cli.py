"""Command-line front end: gen | train | solve | bench | plot.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every command is
deterministic for a fixed --seed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import sys
import time
from pathlib import Path

import numpy as np

from . import engine, instances, qnet, training
from .credit import RewardConfig
from .errors import ColgenError
from .policies import POLICY_NAMES, make_policy
from .plotting import plot_column_sizes, plot_convergence

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _fail_usage(parser, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    parser.print_usage(sys.stderr)
    return USAGE_ERROR


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--problem", choices=("csp", "vrptw"), default="csp")
    parser.add_argument("--candidates", type=int, default=10,
                        help="candidate columns per pricing round")
    parser.add_argument("--gap", type=float, default=0.15,
                        help="relative pricing gap; 1.0 keeps every improving column")
    parser.add_argument("--alpha", type=float, default=2000.0)
    parser.add_argument("--beta", type=float, default=0.3)
    parser.add_argument("--model", type=Path, default=None,
                        help="weights file for rl policies")
    parser.add_argument("--out", type=Path, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colgen",
        description="Column generation with learned multi-column selection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance suite")
    _add_common(p_gen)
    p_gen.add_argument("--count", type=int, default=10)
    p_gen.add_argument("--roll-length", type=int, default=50)
    p_gen.add_argument("--item-types", type=int, nargs=2, default=(20, 40),
                       metavar=("LO", "HI"))
    p_gen.add_argument("--weight-range", type=int, nargs=2, default=None,
                       metavar=("LO", "HI"))
    p_gen.add_argument("--demand-range", type=int, nargs=2, default=(1, 50),
                       metavar=("LO", "HI"))
    p_gen.add_argument("--customers", type=int, nargs=2, default=(5, 16),
                       metavar=("LO", "HI"))
    p_gen.add_argument("--from-solomon", type=Path, default=None,
                       help="truncate customers from this Solomon file")

    p_solve = sub.add_parser("solve", help="solve one instance with a policy")
    _add_common(p_solve)
    p_solve.add_argument("--instance", type=Path, required=True)
    p_solve.add_argument("--policy", required=True)
    p_solve.add_argument("--trace", type=Path, default=None)
    p_solve.add_argument("--fixed-k", type=int, default=5)
    p_solve.add_argument("--max-iterations", type=int, default=None)

    p_train = sub.add_parser("train", help="train the selection network")
    _add_common(p_train)
    p_train.add_argument("--instances", type=Path, required=True,
                         help="directory of instance JSON files")
    p_train.add_argument("--passes", type=int, default=2)
    p_train.add_argument("--hidden", type=int, default=qnet.DEFAULT_HIDDEN)
    p_train.add_argument("--learning-rate", type=float, default=1e-3)
    p_train.add_argument("--gamma", type=float, default=0.9)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--replay", type=int, default=20000)
    p_train.add_argument("--target-sync", type=int, default=200)
    p_train.add_argument("--epsilon-start", type=float, default=1.0)
    p_train.add_argument("--epsilon-end", type=float, default=0.05)
    p_train.add_argument("--log", type=Path, default=None)
    p_train.add_argument("--checkpoint-dir", type=Path, default=None)

    p_bench = sub.add_parser("bench", help="compare policies over a suite")
    _add_common(p_bench)
    p_bench.add_argument("--instances", type=Path, required=True)
    p_bench.add_argument("--policies", default="greedy-s,greedy-m",
                         help="comma-separated policy names")
    p_bench.add_argument("--traces", type=Path, default=None,
                         help="directory for per-run trace CSVs")
    p_bench.add_argument("--fixed-k", type=int, default=5)
    p_bench.add_argument("--workers", type=int, default=1)

    p_plot = sub.add_parser("plot", help="charts from trace CSVs")
    _add_common(p_plot)
    p_plot.add_argument("--traces", type=Path, required=True,
                        help="directory of {policy}__{instance}.csv files")
    p_plot.add_argument("--mode", choices=("convergence", "sizes"),
                        default="convergence")
    return parser


# -- helpers -----------------------------------------------------------------


def _load_suite(path: Path):
    if path.is_file():
        return [(path.stem, instances.load_instance(path))]
    files = sorted(path.glob("*.json"))
    if not files:
        raise ColgenError(f"no instance JSON files under {path}")
    return [(f.stem, instances.load_instance(f)) for f in files]


def _reward_config(args) -> RewardConfig:
    return RewardConfig(alpha=args.alpha, beta=args.beta)


def _policy_for(args, name, weights, seed):
    return make_policy(name, weights=weights,
                       k=getattr(args, "fixed_k", 5),
                       rng=np.random.default_rng(seed))


def _needs_model(name: str) -> bool:
    return name in ("ffcg", "rl-single")


# -- subcommands ---------------------------------------------------------------


def cmd_gen(args, parser) -> int:
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    written = []
    for i in range(args.count):
        if args.problem == "csp":
            m = int(rng.integers(args.item_types[0], args.item_types[1] + 1))
            inst = instances.generate_csp(
                seed=int(rng.integers(0, 2**31 - 1)),
                roll_length=args.roll_length, n_item_types=m,
                weight_range=tuple(args.weight_range) if args.weight_range else None,
                demand_range=tuple(args.demand_range))
            name = f"csp_n{args.roll_length}_{i:04d}.json"
        else:
            n = int(rng.integers(args.customers[0], args.customers[1] + 1))
            if args.from_solomon:
                base = instances.parse_solomon(args.from_solomon.read_text())
                inst = instances.truncate_solomon(base, min(n, base.n_customers))
            else:
                inst = instances.generate_vrptw(
                    seed=int(rng.integers(0, 2**31 - 1)), n_customers=n)
            name = f"vrptw_c{inst.n_customers}_{i:04d}.json"
        path = out / name
        path.write_text(instances.to_json(inst))
        written.append(path)
    print(f"wrote {len(written)} instances to {out}")
    return 0


def cmd_solve(args, parser) -> int:
    if args.policy not in POLICY_NAMES:
        return _fail_usage(parser, f"unknown policy {args.policy!r}")
    if _needs_model(args.policy) and args.model is None:
        return _fail_usage(parser, f"--policy {args.policy} requires --model")
    weights = qnet.load_weights(args.model) if args.model else None
    inst = instances.load_instance(args.instance)
    policy = _policy_for(args, args.policy, weights, args.seed)
    cfg = engine.CgConfig(candidates=args.candidates, gap=args.gap,
                          max_iterations=args.max_iterations,
                          rng=np.random.default_rng(args.seed))
    result = engine.run(inst, policy, cfg)
    trace = result.trace
    print(f"objective={result.solution.objective!r}")
    print(f"iterations={trace.iterations}")
    print(f"columns_added={trace.total_selected}")
    if args.trace:
        args.trace.parent.mkdir(parents=True, exist_ok=True)
        args.trace.write_text(trace.to_csv())
    return 0


def cmd_train(args, parser) -> int:
    suite = [inst for _, inst in _load_suite(args.instances)]
    cfg = training.TrainConfig(
        replay_capacity=args.replay, batch_size=args.batch_size,
        target_sync=args.target_sync, epsilon_start=args.epsilon_start,
        epsilon_end=args.epsilon_end, learning_rate=args.learning_rate,
        gamma=args.gamma, hidden=args.hidden, seed=args.seed,
        passes=args.passes, candidates=args.candidates, gap=args.gap,
        reward=_reward_config(args),
        checkpoint_dir=str(args.checkpoint_dir) if args.checkpoint_dir else None)
    weights, log = training.train(suite, cfg)
    out = args.out or Path("weights.json")
    qnet.save_weights(weights, out)
    print(f"trained on {len(suite)} instances x {args.passes} passes -> {out}")
    if args.log:
        args.log.write_text(training.log_to_csv(log))
    return 0


def _bench_one(task):
    name, idx, inst, args_dict, weights = task
    policy = make_policy(name, weights=weights, k=args_dict["fixed_k"],
                         rng=np.random.default_rng(args_dict["seed"] + idx))
    cfg = engine.CgConfig(candidates=args_dict["candidates"], gap=args_dict["gap"],
                          rng=np.random.default_rng(args_dict["seed"] + idx))
    t0 = time.perf_counter()
    result = engine.run(inst, policy, cfg)
    wall = (time.perf_counter() - t0) * 1e3
    return (name, idx, result.trace, result.solution.objective, wall)


def cmd_bench(args, parser) -> int:
    names = [n.strip() for n in args.policies.split(",") if n.strip()]
    for name in names:
        if name not in POLICY_NAMES:
            return _fail_usage(parser, f"unknown policy {name!r}")
        if _needs_model(name) and args.model is None:
            return _fail_usage(parser, f"policy {name} requires --model")
    weights = qnet.load_weights(args.model) if args.model else None
    suite = _load_suite(args.instances)
    tasks = []
    args_dict = {"fixed_k": args.fixed_k, "seed": args.seed,
                 "candidates": args.candidates, "gap": args.gap}
    for name in names:
        for idx, (_, inst) in enumerate(suite):
            tasks.append((name, idx, inst, args_dict, weights))
    if args.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(args.workers) as pool:
            outcomes = list(pool.map(_bench_one, tasks))
    else:
        outcomes = [_bench_one(t) for t in tasks]
    outcomes.sort(key=lambda o: (o[0], o[1]))  # deterministic merge

    rows = []
    for name, idx, trace, objective, wall in outcomes:
        label = suite[idx][0]
        rows.append({"policy": name, "instance": label,
                     "iterations": trace.iterations,
                     "columns": trace.total_selected,
                     "ms": wall, "objective": objective})
        if args.traces:
            args.traces.mkdir(parents=True, exist_ok=True)
            (args.traces / f"{name}__{label}.csv").write_text(trace.to_csv())

    out = args.out or Path("bench_results.csv")
    lines = ["policy,instance,iterations,columns,ms,objective"]
    for r in rows:
        lines.append(f"{r['policy']},{r['instance']},{r['iterations']},"
                     f"{r['columns']},{r['ms']!r},{r['objective']!r}")
    out.write_text("\n".join(lines) + "\n")

    table = [f"{'policy':<12}{'#itr':>10}{'#col':>10}{'ms':>12}{'objective':>14}"]
    for name in names:
        sub = [r for r in rows if r["policy"] == name]
        iters = np.mean([r["iterations"] for r in sub])
        cols = np.mean([r["columns"] for r in sub])
        ms = np.mean([r["ms"] for r in sub])
        obj = np.mean([r["objective"] for r in sub])
        table.append(f"{name:<12}{iters:>10.2f}{cols:>10.2f}{ms:>12.1f}{obj:>14.4f}")
    text = "\n".join(table)
    out.with_suffix(".txt").write_text(text + "\n")
    print(text)
    print(f"results -> {out}")
    return 0


def cmd_plot(args, parser) -> int:
    files = sorted(args.traces.glob("*.csv"))
    if not files:
        return _fail_usage(parser, f"no trace CSVs under {args.traces}")
    groups = {}
    for f in files:
        policy = f.stem.split("__", 1)[0]
        try:
            trace = engine.CgTrace.from_csv(f.read_text())
        except (ValueError, IndexError) as exc:
            print(f"error: malformed trace {f}: {exc}", file=sys.stderr)
            return USAGE_ERROR
        groups.setdefault(policy, []).append(trace)
    out = args.out or Path(f"{args.mode}.svg")
    if args.mode == "convergence":
        plot_convergence(groups, out)
    else:
        plot_column_sizes(groups, out)
    print(f"chart -> {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    handlers = {"gen": cmd_gen, "solve": cmd_solve, "train": cmd_train,
                "bench": cmd_bench, "plot": cmd_plot}
    try:
        return handlers[args.command](args, parser)
    except (ColgenError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
