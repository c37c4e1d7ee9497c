"""Linear autoencoder: principal-subspace compression and reconstruction.

Reconstruction error (MAPE) of a row is the uncertainty signal for
observed values; the encoder is the rank-r truncation of the SVD of the
centered data, so encode/decode is a single orthogonal projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, RankError, ShapeError, UndefinedMAPE, UsageError


@dataclass(frozen=True)
class AEModel:
    column_means: np.ndarray
    components: np.ndarray  # (r, n_cols), orthonormal rows
    r: int


def fit_linear_ae(X, r: int) -> AEModel:
    """Fit the rank-r principal subspace of a complete matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("X must be a matrix")
    if not np.isfinite(X).all():
        raise InputError("X contains non-finite values")
    if not 1 <= r <= min(X.shape):
        raise UsageError(f"r must be in [1, {min(X.shape)}]")
    means = X.mean(axis=0)
    centered = X - means
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > s[0] * max(X.shape) * np.finfo(float).eps)) if s.size else 0
    if r > rank:
        raise RankError(f"requested rank {r} exceeds numerical rank {rank}")
    return AEModel(column_means=means, components=vt[:r].copy(), r=r)


def reconstruct(model: AEModel, x) -> np.ndarray:
    """Project one row (or a matrix of rows) onto the learned subspace."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    if rows.shape[1] != model.column_means.shape[0]:
        raise ShapeError("row length does not match the fitted model")
    centered = rows - model.column_means
    out = model.column_means + centered @ model.components.T @ model.components
    return out[0] if single else out


def mape_reconstruction(x, xhat) -> float:
    """Mean absolute percentage error; terms with x_i = 0 are excluded."""
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    if x.shape != xhat.shape or x.ndim != 1:
        raise ShapeError("x and xhat must be vectors of equal length")
    keep = x != 0
    if not keep.any():
        raise UndefinedMAPE("every reference value is zero")
    return float(np.mean(np.abs((x[keep] - xhat[keep]) / x[keep]))) * 100.0
