"""Density-biased subsampling of clustered points.

Cluster quotas follow m_i = min(n_i, max(3, round(N * n_i / sum n_k)))
with round-half-away-from-zero; clusters of three or fewer points skip
sampling entirely.  Within a cluster, points are kept with probability
proportional to a Gaussian KDE of the cluster itself, biasing the
selection toward dense areas.  Noise points (label -1) do not consume
quota and are always kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..cluster import ClusterLabels
from ..errors import UsageError

KEEP_WHOLE_AT = 3
DEFAULT_TARGET = 100
DEFAULT_BANDWIDTH = 0.5


@dataclass(frozen=True)
class SampleResult:
    kept: dict  # cluster label -> sorted point indices (noise under -1)
    quotas: dict  # cluster label -> m_i (clusters only)
    densities: dict  # cluster label -> density per member, aligned with members
    members: dict  # cluster label -> member indices (for density alignment)

    def kept_indices(self) -> np.ndarray:
        out = np.concatenate([v for v in self.kept.values()]) if self.kept else np.empty(0, int)
        return np.sort(out).astype(int)


def round_half_away(x: float) -> float:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def gaussian_kde(points: np.ndarray, at: np.ndarray, bandwidth: float) -> np.ndarray:
    """Mean of isotropic Gaussian kernels centred on points, evaluated at `at`."""
    d2 = np.sum((at[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    h2 = bandwidth * bandwidth
    return np.exp(-d2 / (2 * h2)).sum(axis=1) / (points.shape[0] * 2 * math.pi * h2)


def density_sample(
    points,
    labels: ClusterLabels,
    target: int = DEFAULT_TARGET,
    bandwidth: float = DEFAULT_BANDWIDTH,
    seed: int = 0,
) -> SampleResult:
    points = np.asarray(points, dtype=float)
    if target < 1:
        raise UsageError("target must be >= 1")
    if bandwidth <= 0:
        raise UsageError("bandwidth must be > 0")
    if points.shape[0] != labels.labels.shape[0]:
        raise UsageError("labels do not match points")

    rng = np.random.default_rng(seed)
    total_clustered = int(np.sum(labels.labels >= 0))
    kept: dict = {}
    quotas: dict = {}
    densities: dict = {}
    members: dict = {}

    for c in range(labels.n_clusters):
        idx = np.flatnonzero(labels.labels == c)
        members[c] = idx
        dens = gaussian_kde(points[idx], points[idx], bandwidth)
        densities[c] = dens
        n_i = idx.size
        if n_i <= KEEP_WHOLE_AT:
            quotas[c] = n_i
            kept[c] = idx.copy()
            continue
        m_i = int(min(n_i, max(3, round_half_away(target * n_i / total_clustered))))
        quotas[c] = m_i
        if m_i == n_i:
            kept[c] = idx.copy()
        else:
            p = dens / dens.sum()
            chosen = rng.choice(idx, size=m_i, replace=False, p=p)
            kept[c] = np.sort(chosen)

    noise = np.flatnonzero(labels.labels == -1)
    if noise.size:
        kept[-1] = noise

    return SampleResult(kept=kept, quotas=quotas, densities=densities, members=members)
