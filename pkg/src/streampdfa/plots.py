"""Figure rendering for bench reports: PNGs written next to the CSV."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _config_key(row: dict) -> str:
    detail = row["params"].split(";")
    tag = next((p for p in detail if p.startswith(("nfutures=", "k="))), "")
    return f"{row['mode']}:{row['heuristic']}:{tag}".rstrip(":")


def render_bench_plots(rows: list[dict], out_dir) -> list[Path]:
    """Per-scenario error curves, total wall time, and storage comparison.
    Returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = [r for r in rows if r["scenario"] != "mean"]
    summaries = [r for r in rows if r["scenario"] == "mean"]
    by_config: dict[str, list[dict]] = {}
    for r in data:
        by_config.setdefault(_config_key(r), []).append(r)
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for key, group in sorted(by_config.items()):
        xs = list(range(len(group)))
        ys = [float(r["error"]) for r in group]
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1, label=key)
        ax.set_xticks(xs)
        ax.set_xticklabels([r["scenario"] for r in group], rotation=90, fontsize=6)
    ax.set_xlabel("scenario")
    ax.set_ylabel("perplexity error")
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = out_dir / "errors_by_scenario.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    if summaries:
        fig, ax = plt.subplots(figsize=(6, 4))
        labels = [_config_key(r) for r in summaries]
        walls = [int(r["wall_ms"]) / 1000.0 for r in summaries]
        ax.bar(labels, walls, color="#5b8dbf")
        ax.set_ylabel("total wall time (s)")
        ax.tick_params(axis="x", labelrotation=20, labelsize=7)
        fig.tight_layout()
        path = out_dir / "wall_time_total.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for key, group in sorted(by_config.items()):
        xs = [int(r["stored_states"]) for r in group]
        ys = [float(r["error"]) for r in group]
        ax.scatter(xs, ys, s=12, label=key, alpha=0.7)
    ax.set_xscale("log")
    ax.set_xlabel("peak stored states")
    ax.set_ylabel("perplexity error")
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = out_dir / "storage_vs_error.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
