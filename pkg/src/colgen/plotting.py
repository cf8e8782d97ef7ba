"""Convergence-trace aggregation and static SVG charts.

Each instance's objective trajectory is min-max normalized to [0, 1]
(initial objective -> 1, converged objective -> 0; constant trajectories
map to 0), shorter runs are padded with their final value, and the curves
are averaged pointwise per policy with a +-1 std band. The column-size
mode recounts the number of selected columns per iteration index.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .engine import CgTrace  # noqa: E402

_COLORS = {
    "ffcg": "tab:green",
    "greedy-s": "tab:red",
    "greedy-m": "tab:orange",
    "rl-single": "tab:gray",
    "fixed-k": "tab:purple",
    "random": "tab:blue",
}


def normalize_trajectory(objectives: Sequence[float]) -> np.ndarray:
    objs = np.asarray(objectives, dtype=float)
    if objs.size == 0:
        return objs
    lo, hi = objs.min(), objs.max()
    if hi - lo <= 1e-15:
        return np.zeros_like(objs)
    return (objs - lo) / (hi - lo)


def normalized_mean_trajectories(traces: Sequence[CgTrace]):
    """(mean, std) of normalized objective curves, padded to equal length."""
    if not traces:
        raise ValueError("no traces to aggregate")
    curves = [normalize_trajectory(t.objectives()) for t in traces]
    width = max(len(c) for c in curves)
    padded = np.vstack([
        np.concatenate([c, np.full(width - len(c), c[-1] if len(c) else 0.0)])
        for c in curves
    ])
    return padded.mean(axis=0), padded.std(axis=0)


def column_size_profile(traces: Sequence[CgTrace]):
    """Per-iteration-index selected-column counts across traces.

    Returns (mean per index, list of raw count lists per index).
    """
    if not traces:
        raise ValueError("no traces to aggregate")
    width = max(t.iterations for t in traces)
    buckets = [[] for _ in range(width)]
    for t in traces:
        for i, row in enumerate(t.rows):
            buckets[i].append(row.n_selected)
    means = np.array([np.mean(b) if b else 0.0 for b in buckets])
    return means, buckets


def quartile_means(traces: Sequence[CgTrace]):
    """Mean selected-column count over the first and last quartile of
    iterations, pooled across traces."""
    firsts, lasts = [], []
    for t in traces:
        counts = [r.n_selected for r in t.rows]
        q = max(1, len(counts) // 4)
        firsts.extend(counts[:q])
        lasts.extend(counts[-q:])
    return float(np.mean(firsts)), float(np.mean(lasts))


def plot_convergence(trace_groups: Mapping[str, Sequence[CgTrace]], out_path,
                     title: str = "CG convergence"):
    """Mean normalized objective per policy with a +-1 std band (SVG)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in sorted(trace_groups):
        mean, std = normalized_mean_trajectories(trace_groups[name])
        xs = np.arange(len(mean))
        color = _COLORS.get(name)
        ax.plot(xs, mean, label=name, color=color)
        ax.fill_between(xs, mean - std, mean + std, alpha=0.2, color=color)
    ax.set_xlabel("CG iteration")
    ax.set_ylabel("normalized objective")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)


def plot_column_sizes(trace_groups: Mapping[str, Sequence[CgTrace]], out_path,
                      title: str = "Selected columns per iteration"):
    """Mean number of selected columns per iteration index, per policy (SVG)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    names = sorted(trace_groups)
    width = 0.8 / max(1, len(names))
    for k, name in enumerate(names):
        means, _ = column_size_profile(trace_groups[name])
        xs = np.arange(len(means)) + k * width
        ax.bar(xs, means, width=width, label=name, color=_COLORS.get(name))
    ax.set_xlabel("CG iteration")
    ax.set_ylabel("mean selected columns")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
