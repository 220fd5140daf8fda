"""Command line interface: learn, eval, bench.

Exit codes: 0 success, 2 usage, 3 input data, 4 internal invariant.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .automaton import export_dot
from .bench import RunConfig, default_configs, learn, parse_config, run_bench, write_csv
from .dataio import read_abbadingo, read_solution
from .errors import InputDataError, InvariantViolation, UsageError
from .evaluation import CSV_HEADER, evaluate_scenario
from .model_io import load_model, save_model
from .streaming import live_stats


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streampdfa",
        description="Learn probabilistic DFAs from sequence data, stream or batch.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_learn = sub.add_parser("learn", help="learn a model from an Abbadingo file")
    src = p_learn.add_mutually_exclusive_group(required=True)
    src.add_argument("--train", type=Path, help="training file")
    src.add_argument("--stdin", action="store_true", help="read training data from stdin")
    p_learn.add_argument("--mode", choices=["stream", "batch"], default="stream")
    p_learn.add_argument("--heuristic", choices=["sketch", "alergia"], default="sketch")
    p_learn.add_argument("--alpha", type=float, default=0.05)
    p_learn.add_argument("--nfutures", type=int, default=2)
    p_learn.add_argument("--k", type=int, default=1)
    p_learn.add_argument("--batchsize", type=int, default=500)
    p_learn.add_argument("--threshold", type=int, default=100)
    p_learn.add_argument("--cms-width", type=int, default=128)
    p_learn.add_argument("--cms-depth", type=int, default=4)
    p_learn.add_argument("--seed", type=int, default=1)
    p_learn.add_argument("--out", type=Path, required=True, help="model output path")
    p_learn.add_argument("--dot", type=Path, help="also write Graphviz DOT here")
    p_learn.set_defaults(func=cmd_learn)

    p_eval = sub.add_parser("eval", help="score a saved model on a test set")
    p_eval.add_argument("--model", type=Path, required=True)
    p_eval.add_argument("--test", type=Path, required=True)
    p_eval.add_argument("--solution", type=Path, required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="run the config matrix over a scenario directory")
    p_bench.add_argument("--pautomac-dir", type=Path, required=True)
    p_bench.add_argument(
        "--config", action="append", default=None, metavar="MODE:HEURISTIC[:K=V...]",
        help="repeatable; default is the standard four-config matrix",
    )
    p_bench.add_argument("--out", type=Path, help="CSV output path (default stdout)")
    p_bench.add_argument("--plots", type=Path, help="also render figures into this directory")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def _run_config_from_args(args) -> RunConfig:
    return RunConfig(
        mode=args.mode,
        heuristic=args.heuristic,
        alpha=args.alpha,
        n_futures=args.nfutures,
        k=args.k,
        batch_size=args.batchsize,
        threshold=args.threshold,
        cms_width=args.cms_width,
        cms_depth=args.cms_depth,
        seed=args.seed,
    )


def cmd_learn(args) -> int:
    config = _run_config_from_args(args)
    source = sys.stdin if args.stdin else args.train
    start = time.perf_counter()
    model, wall_ms, stored, sketch_bytes = learn(config, source)
    total_ms = (time.perf_counter() - start) * 1000.0
    metadata = {
        "mode": config.mode,
        "heuristic": config.heuristic,
        "params": config.params_string(),
        # learning-run statistics, carried so eval rows line up with bench rows
        "peak_states": str(stored),
        "sketch_bytes": str(sketch_bytes),
    }
    save_model(model, args.out, metadata)
    if args.dot is not None:
        args.dot.write_text(export_dot(model))
    stats = live_stats(model)
    print(
        f"states={stats.stored_states} reds={stats.reds} blues={stats.blues} "
        f"whites={stats.whites} retired={stats.retired} sequences={stats.sequences} "
        f"peak_states={stored} sketch_bytes={sketch_bytes} wall_ms={int(round(total_ms))}"
    )
    return 0


def cmd_eval(args) -> int:
    model, metadata = load_model(args.model)
    if not model.frozen:
        raise InputDataError(f"{args.model} holds an unfrozen model; learn writes frozen ones")
    test = read_abbadingo(args.test)
    solution = read_solution(args.solution)
    report = evaluate_scenario(model, test, solution)
    stats = live_stats(model)
    row = [
        args.test.name,
        metadata.get("mode", ""),
        metadata.get("heuristic", ""),
        metadata.get("params", ""),
        f"{report.candidate_perplexity:.6f}",
        f"{report.target_perplexity:.6f}",
        f"{report.error:.6f}",
        "",
        metadata.get("peak_states", str(stats.stored_states)),
        metadata.get("sketch_bytes", str(stats.sketch_bytes)),
    ]
    print(",".join(CSV_HEADER))
    print(",".join(row))
    return 0


def cmd_bench(args) -> int:
    configs = [parse_config(c) for c in args.config] if args.config else default_configs()
    rows = run_bench(args.pautomac_dir, configs)
    if args.out is not None:
        write_csv(rows, args.out)
    else:
        write_csv(rows, sys.stdout)
    if args.plots is not None:
        from .plots import render_bench_plots

        for path in render_bench_plots(rows, args.plots):
            print(f"wrote {path}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (InputDataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except InvariantViolation as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
