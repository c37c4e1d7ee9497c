"""DBSCAN over 2D embeddings, with a k-distance heuristic for eps.

Label assignment is made fully deterministic by two canonical rules:
clusters are numbered by their smallest member core-point index, and a
border point joins the cluster of its smallest-index core neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, UsageError


@dataclass(frozen=True)
class ClusterLabels:
    labels: np.ndarray  # -1 = noise
    n_clusters: int
    sizes: tuple  # per cluster 0..K-1

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.labels == -1))


def dbscan(points, eps: float, min_pts: int) -> ClusterLabels:
    """Density clustering: core iff |eps-ball incl. self| >= min_pts."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise UsageError("points must be a matrix")
    if not np.isfinite(points).all():
        raise InputError("points contain non-finite values")
    if eps <= 0 or min_pts < 1:
        raise UsageError("need eps > 0 and min_pts >= 1")
    n = points.shape[0]
    d = np.sqrt(np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1))
    reach = d <= eps
    core = reach.sum(axis=1) >= min_pts

    labels = np.full(n, -1, dtype=int)
    next_label = 0
    for i in range(n):  # ascending order numbers clusters by smallest core index
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = next_label
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for k in np.flatnonzero(reach[j] & core):
                if labels[k] == -1:
                    labels[k] = next_label
                    frontier.append(k)
        next_label += 1

    for i in np.flatnonzero(~core):
        core_neighbors = np.flatnonzero(reach[i] & core)
        if core_neighbors.size:
            labels[i] = labels[core_neighbors[0]]

    sizes = tuple(int(np.sum(labels == c)) for c in range(next_label))
    return ClusterLabels(labels=labels, n_clusters=next_label, sizes=sizes)


def knee_eps(points, k: int = 4) -> float:
    """eps heuristic: elbow of the sorted k-th-neighbor distance curve.

    The elbow is the curve point farthest from the chord between its
    endpoints.  Degenerate inputs (too few or coincident points) fall
    back to a positive constant so dbscan stays callable.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if n <= k:
        if n < 2:
            return 1.0
        d = np.sqrt(np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1))
        top = float(d.max())
        return top / 2 if top > 0 else 1.0
    d = np.sqrt(np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1))
    kth = np.sort(d, axis=1)[:, k]  # column 0 is the self-distance
    curve = np.sort(kth)
    if curve[-1] <= 0:
        return 1.0
    xs = np.linspace(0.0, 1.0, n)
    ys = curve / curve[-1]
    # distance from each curve point to the first-to-last chord
    x0, y0, x1, y1 = xs[0], ys[0], xs[-1], ys[-1]
    dist = np.abs((y1 - y0) * xs - (x1 - x0) * ys + x1 * y0 - y1 * x0)
    eps = float(curve[int(np.argmax(dist))])
    return eps if eps > 0 else float(curve[-1])
