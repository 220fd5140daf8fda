"""Benchmark harness: run learner configurations over a scenario directory
and tabulate perplexity error, wall time, and storage per run.

A scenario is a train/test/solution file triple discovered by name; any
train file "<prefix>.train*" pairs with "<prefix>.test*" and a
"<prefix>_solution*" or "<prefix>.solution*" file. Incomplete triples are
skipped with a warning on stderr.
"""

from __future__ import annotations

import csv
import io
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .alergia import AlergiaHeuristic
from .cms import CmsConfig
from .dataio import Dataset, iter_abbadingo, read_abbadingo, read_solution
from .errors import InputDataError, UsageError
from .evaluation import CSV_HEADER, evaluate_scenario
from .merging import build_apta, merge_until_fixpoint
from .automaton import freeze
from .sketch_heuristic import SketchHeuristic
from .streaming import StreamParams, run_stream

WORKERS_ENV = "STREAMPDFA_WORKERS"


@dataclass(frozen=True)
class RunConfig:
    """One learner configuration; applies to stream and batch modes alike
    (batch ignores batch_size and threshold)."""

    mode: str = "stream"
    heuristic: str = "sketch"
    alpha: float = 0.05
    n_futures: int = 2
    k: int = 1
    batch_size: int = 500
    threshold: int = 100
    cms_width: int = 128
    cms_depth: int = 4
    seed: int = 1

    def __post_init__(self):
        if self.mode not in ("stream", "batch"):
            raise UsageError(f"mode must be stream or batch, got {self.mode!r}")
        if self.heuristic not in ("sketch", "alergia"):
            raise UsageError(f"heuristic must be sketch or alergia, got {self.heuristic!r}")
        if self.mode == "stream" and self.heuristic == "alergia" and self.k >= 2:
            raise UsageError("k >= 2 compares layers a stream never stores; use batch mode")

    def label(self) -> str:
        detail = f"nf{self.n_futures}" if self.heuristic == "sketch" else f"k{self.k}"
        return f"{self.mode}-{self.heuristic}-{detail}"

    def params_string(self) -> str:
        parts = [f"alpha={self.alpha}"]
        if self.heuristic == "sketch":
            parts.append(f"nfutures={self.n_futures}")
            parts.append(f"cms={self.cms_width}x{self.cms_depth}")
            parts.append(f"seed={self.seed}")
        else:
            parts.append(f"k={self.k}")
        if self.mode == "stream":
            parts.append(f"b={self.batch_size}")
            parts.append(f"t={self.threshold}")
        return ";".join(parts)

    def make_heuristic(self):
        if self.heuristic == "sketch":
            return SketchHeuristic(alpha=self.alpha)
        return AlergiaHeuristic(alpha=self.alpha, k=self.k)

    def cms_config(self) -> CmsConfig:
        return CmsConfig(width=self.cms_width, depth=self.cms_depth, seed=self.seed)


def default_configs() -> list[RunConfig]:
    """The standard comparison matrix: two-symbol and three-symbol lookahead
    sketches and the exact-count baseline in stream mode, plus the two-tails
    batch baseline."""
    return [
        RunConfig(mode="stream", heuristic="sketch", n_futures=2),
        RunConfig(mode="stream", heuristic="alergia", k=1),
        RunConfig(mode="stream", heuristic="sketch", n_futures=3),
        RunConfig(mode="batch", heuristic="alergia", k=2),
    ]


def parse_config(text: str) -> RunConfig:
    """Parse "mode:heuristic[:key=value...]", e.g. "stream:sketch:nfutures=3"
    or "batch:alergia:k=2:alpha=0.01"."""
    parts = text.split(":")
    if len(parts) < 2:
        raise UsageError(f"config {text!r} must look like mode:heuristic[:key=value...]")
    kwargs: dict = {"mode": parts[0], "heuristic": parts[1]}
    int_keys = {"nfutures", "k", "batchsize", "threshold", "cms-width", "cms-depth", "seed"}
    key_map = {
        "nfutures": "n_futures", "k": "k", "alpha": "alpha",
        "batchsize": "batch_size", "threshold": "threshold",
        "cms-width": "cms_width", "cms-depth": "cms_depth", "seed": "seed",
    }
    for item in parts[2:]:
        key, sep, value = item.partition("=")
        if not sep or key not in key_map:
            raise UsageError(f"config {text!r}: bad option {item!r}")
        try:
            kwargs[key_map[key]] = int(value) if key in int_keys else float(value)
        except ValueError:
            raise UsageError(f"config {text!r}: bad value for {key}") from None
    return RunConfig(**kwargs)


def learn(config: RunConfig, source) -> tuple:
    """Learn one frozen model. `source` is a train file path, a readable
    text object, or a Dataset. Returns (model, wall_ms, stored_states,
    sketch_bytes)."""
    heuristic = config.make_heuristic()
    start = time.perf_counter()
    if config.mode == "stream":
        params = StreamParams(
            heuristic=heuristic,
            batch_size=config.batch_size,
            threshold=config.threshold,
            n_futures=config.n_futures,
            cms=config.cms_config(),
        )
        stream = source if isinstance(source, Dataset) else iter_abbadingo(source)
        model = run_stream(stream, params)
    else:
        data = source if isinstance(source, Dataset) else read_abbadingo(source)
        with_sketches = config.heuristic == "sketch"
        model = build_apta(
            data,
            with_sketches=with_sketches,
            n_futures=config.n_futures if with_sketches else 0,
            cms_config=config.cms_config() if with_sketches else None,
        )
        merge_until_fixpoint(model, heuristic)
        freeze(model)
    wall_ms = (time.perf_counter() - start) * 1000.0
    # storage is reported at its peak: for a stream that is the bounded
    # fringe, for batch the whole prefix tree
    stored = model.peak_states
    if model.sketch_config is not None:
        cell_bytes = model.n_futures * model.sketch_config.depth * (model.sketch_config.width + 1) * 8
        sketch_bytes = stored * cell_bytes
    else:
        sketch_bytes = 0
    return model, wall_ms, stored, sketch_bytes


@dataclass(frozen=True)
class Scenario:
    name: str
    train: Path
    test: Path
    solution: Path


def _scenario_sort_key(name: str):
    return (0, int(name)) if name.isdigit() else (1, name)


def discover_scenarios(root) -> list[Scenario]:
    root = Path(root)
    if not root.is_dir():
        raise InputDataError(f"scenario directory {root} does not exist")
    scenarios = []
    for train in sorted(root.iterdir()):
        m = re.match(r"(?s)(.+?)\.train(\..*)?$", train.name)
        if m is None:
            continue
        prefix, suffix = m.group(1), m.group(2) or ""
        test = None
        for cand in (f"{prefix}.test{suffix}", f"{prefix}.test"):
            if (root / cand).exists():
                test = root / cand
                break
        solution = None
        for cand in (
            f"{prefix}_solution.txt", f"{prefix}_solution{suffix}",
            f"{prefix}.solution{suffix}", f"{prefix}.solution",
        ):
            if (root / cand).exists():
                solution = root / cand
                break
        if test is None or solution is None:
            missing = "test" if test is None else "solution"
            print(f"warning: scenario {prefix}: no {missing} file, skipping", file=sys.stderr)
            continue
        lead = prefix.split(".")[0]
        name = lead if lead.isdigit() else prefix
        scenarios.append(Scenario(name, train, test, solution))
    scenarios.sort(key=lambda sc: _scenario_sort_key(sc.name))
    return scenarios


def run_task(config: RunConfig, scenario: Scenario) -> dict:
    model, wall_ms, stored, sketch_bytes = learn(config, scenario.train)
    test = read_abbadingo(scenario.test)
    solution = read_solution(scenario.solution)
    report = evaluate_scenario(model, test, solution)
    return {
        "scenario": scenario.name,
        "mode": config.mode,
        "heuristic": config.heuristic,
        "params": config.params_string(),
        "candidate_perplexity": f"{report.candidate_perplexity:.6f}",
        "target_perplexity": f"{report.target_perplexity:.6f}",
        "error": f"{report.error:.6f}",
        "wall_ms": str(int(round(wall_ms))),
        "stored_states": str(stored),
        "sketch_bytes": str(sketch_bytes),
    }


def _pool_task(args):
    return run_task(*args)


def summarize(rows: list[dict], configs: list[RunConfig]) -> list[dict]:
    """One trailing row per config: mean error, total wall time."""
    out = []
    for cfg in configs:
        mine = [r for r in rows if r["mode"] == cfg.mode and r["params"] == cfg.params_string()]
        if not mine:
            continue
        errors = [float(r["error"]) for r in mine]
        walls = [int(r["wall_ms"]) for r in mine]
        out.append({
            "scenario": "mean",
            "mode": cfg.mode,
            "heuristic": cfg.heuristic,
            "params": cfg.params_string(),
            "candidate_perplexity": "",
            "target_perplexity": "",
            "error": f"{sum(errors) / len(errors):.6f}",
            "wall_ms": str(sum(walls)),
            "stored_states": "",
            "sketch_bytes": "",
        })
    return out


def run_bench(scenario_dir, configs: list[RunConfig] | None = None,
              workers: int | None = None) -> list[dict]:
    scenarios = discover_scenarios(scenario_dir)
    if not scenarios:
        raise InputDataError(f"no usable scenarios under {scenario_dir}")
    configs = configs or default_configs()
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        workers = int(env) if env else (os.cpu_count() or 1)
    tasks = [(cfg, sc) for cfg in configs for sc in scenarios]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_pool_task, tasks))
    else:
        rows = [run_task(cfg, sc) for cfg, sc in tasks]
    rows.extend(summarize(rows, configs))
    return rows


def write_csv(rows: list[dict], destination) -> None:
    """Write rows in the report schema; the header row is always emitted."""
    own = not hasattr(destination, "write")
    fh = open(destination, "w", newline="") if own else destination
    try:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if own:
            fh.close()


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()
