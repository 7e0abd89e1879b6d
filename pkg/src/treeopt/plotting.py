"""Figures for benchmark sweeps: mean tree-connectivity against edge count."""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np

__all__ = ["plot_sweep"]

STYLE = {
    "init": dict(color="0.55", ls=":", marker=""),
    "greedy": dict(color="C0", ls="-", marker="o"),
    "convex": dict(color="C1", ls="-", marker="s"),
    "exact": dict(color="k", ls="--", marker="x"),
    "random": dict(color="C2", ls="-", marker="^"),
    "relaxation": dict(color="C3", ls="-.", marker=""),
}


def _means(rows, method, col):
    acc = defaultdict(list)
    for r in rows:
        if r["method"] == method and r[col] is not None:
            acc[r["m"]].append(r[col])
    ms = sorted(acc)
    return np.array(ms), np.array([np.mean(acc[m]) for m in ms])


def plot_sweep(rows: Sequence[dict], path: str) -> list[tuple[int, int]]:
    """One panel per ``(n, k)``: mean tau per method over trials vs ``m``.

    The relaxation optimum (the convex rows' upper bound) is drawn as its own
    curve so the bracket around the exact optimum is visible.  Returns the
    panel keys in drawing order.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    panels = sorted({(r["n"], r["k"]) for r in rows})
    ncols = max(len(panels), 1)
    fig, axes = plt.subplots(1, ncols, figsize=(4.2 * ncols, 3.4), squeeze=False)
    for ax, (n, k) in zip(axes[0], panels):
        sub = [r for r in rows if r["n"] == n and r["k"] == k]
        for method in ("init", "greedy", "convex", "random", "exact"):
            x, y = _means(sub, method, "tau")
            if x.size:
                ax.plot(x, y, label=method, **STYLE[method])
        x, y = _means(sub, "convex", "upper")
        if x.size:
            ax.plot(x, y, label="relaxation", **STYLE["relaxation"])
        ax.set_title(f"n={n}, k={k}")
        ax.set_xlabel("base edges m")
        ax.set_ylabel("tree-connectivity (nats)")
        ax.grid(alpha=0.3)
    if panels:
        axes[0][0].legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return panels
