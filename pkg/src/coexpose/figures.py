"""Figure rendering for experiment reports.

Two plots accompany the delimited output: the per-node exposure profile
against node leanings, and the leaning gap covered by each selected seed
pair.  Files are PNG, written next to the report.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def render_figures(outdir, graph, items, report) -> list[Path]:
    outdir = Path(outdir)
    paths = []

    seeds = sorted({u for u, _ in report.assignment.pairs})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.scatter(graph.node_leaning, report.per_node_mean, s=9, alpha=0.45,
               color="#4878a8", label="node")
    if seeds:
        ax.scatter(graph.node_leaning[seeds], report.per_node_mean[seeds],
                   s=42, color="#c44e52", marker="^", label="seed node")
    ax.set_xlabel("node leaning")
    ax.set_ylabel("estimated exposure level")
    ax.set_xlim(-1.05, 1.05)
    ax.set_title(f"{report.algorithm}: score {report.score:.1f} "
                 f"(se {report.std_error:.2f})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = outdir / "exposure_profile.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    for idx, (u, i) in enumerate(report.assignment.pairs):
        lu = float(graph.node_leaning[u])
        li = float(items.item_leaning[i])
        ax.plot([idx, idx], [lu, li], color="#777777", lw=1.2, zorder=1)
        ax.scatter([idx], [lu], color="#4878a8", s=30, zorder=2)
        ax.scatter([idx], [li], color="#e1812c", s=30, marker="s", zorder=2)
    ax.scatter([], [], color="#4878a8", s=30, label="node leaning")
    ax.scatter([], [], color="#e1812c", s=30, marker="s", label="item leaning")
    ax.set_xlabel("selection order")
    ax.set_ylabel("leaning")
    ax.set_ylim(-1.1, 1.1)
    ax.set_xticks(np.arange(len(report.assignment.pairs)))
    ax.set_title("selected seed pairs")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = outdir / "assignment_span.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)
    return paths
