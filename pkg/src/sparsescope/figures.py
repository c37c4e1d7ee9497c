"""Report figures, rendered headless to files.

Every entry point takes already-computed results plus an output path and
writes one image; nothing here recomputes analytics.  The Agg backend is
forced so rendering works without a display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle
from matplotlib.patches import Polygon as MplPolygon

CLUSTER_CMAP = "tab10"


def comparison_figure(grid: dict, path, target: str | None = None):
    """Grouped bars of held-out MAPE, one group per imputer."""
    imputers = list(grid)
    predictors = list(next(iter(grid.values())))
    width = 0.8 / len(predictors)
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(imputers), 4.0))
    x = np.arange(len(imputers))
    for k, pred in enumerate(predictors):
        vals = [grid[m][pred] for m in imputers]
        ax.bar(x + (k - (len(predictors) - 1) / 2) * width, vals, width, label=pred)
    ax.set_xticks(x)
    ax.set_xticklabels(imputers)
    ax.set_ylabel("MAPE [%]")
    suffix = f" for {target}" if target else ""
    ax.set_title(f"Held-out error by imputer and predictor{suffix}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def missingness_figure(stats: dict, path):
    """Per-column missing fractions plus the row-fraction histogram."""
    cols = stats["colFraction"]
    rows = stats["rowFraction"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    names = list(cols)
    ax1.bar(range(len(names)), [cols[n] for n in names], color="#4878a8")
    ax1.set_xticks(range(len(names)))
    ax1.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax1.set_ylabel("missing fraction")
    ax1.set_title("By column")
    ax2.hist(list(rows.values()), bins=20, color="#a85448")
    ax2.set_xlabel("missing fraction")
    ax2.set_ylabel("rows")
    ax2.set_title("By row")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def scene_figure(scene, path):
    """Final packed-glyph scene: deformed regions, links, glyph discs."""
    fig, ax = plt.subplots(figsize=(6, 6))
    cmap = plt.get_cmap(CLUSTER_CMAP)
    for poly in scene.polygons_post:
        if poly.kind == "dummy":
            face, edge, z = "#f0f0f0", "#cccccc", 1
        else:
            face, edge, z = cmap(poly.cluster % 10), "#888888", 2
        ax.add_patch(
            MplPolygon(poly.vertices, closed=True, facecolor=face, edgecolor=edge, lw=0.6, zorder=z)
        )
    for u, v in scene.edges:
        seg = scene.positions[[u, v]]
        ax.plot(seg[:, 0], seg[:, 1], color="#555555", lw=0.5, zorder=3)
    for i, p in enumerate(scene.positions):
        ax.add_patch(
            Circle(p, scene.glyph_radius, facecolor="white", edgecolor="#222222", lw=0.6, zorder=4)
        )
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_aspect("equal")
    ax.axis("off")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
