"""Exact t-SNE for small point sets, plus embedding CSV exchange.

No Barnes-Hut or other approximation: full pairwise P and Q matrices,
per-point bandwidths found by bisection, early exaggeration, and the
classic momentum-plus-gains descent.  Point counts are capped at 2000;
post-filter sets are far below that.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ParseError, PerplexityError, UsageError

MAX_POINTS = 2000
EXAGGERATION_ITERS = 100
EXAGGERATION_FACTOR = 4.0
MOMENTUM_SWITCH_ITER = 250
_Q_FLOOR = 1e-12


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 30.0
    iters: int = 1000
    learning_rate: float = 200.0
    seed: int = 0


@dataclass(frozen=True)
class Embedding2D:
    points: np.ndarray  # n x 2
    kl_trace: tuple
    seed: int


def conditional_probabilities(X: np.ndarray, perplexity: float, tol: float = 1e-5) -> np.ndarray:
    """Row-stochastic conditional P; each row hits the perplexity within tol."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    cond = np.zeros((n, n))
    for i in range(n):
        row = np.delete(d2[i], i)
        beta_lo, beta_hi = 0.0, np.inf
        beta = 1.0
        p = None
        for _ in range(200):
            w = np.exp(-row * beta)
            total = w.sum()
            if total <= 0:
                p = np.full(row.shape, 1.0 / row.size)
            else:
                p = w / total
            nz = p[p > 0]
            entropy = -np.sum(nz * np.log(nz))
            perp = np.exp(entropy)
            if abs(perp - perplexity) < tol:
                break
            if perp > perplexity:  # too flat, sharpen
                beta_lo = beta
                beta = beta * 2 if beta_hi == np.inf else 0.5 * (beta_lo + beta_hi)
            else:
                beta_hi = beta
                beta = 0.5 * (beta_lo + beta_hi)
        cond[i, np.arange(n) != i] = p
    return cond


def joint_probabilities(X: np.ndarray, perplexity: float, tol: float = 1e-5) -> np.ndarray:
    """Symmetrized P matrix; sums to 1."""
    cond = conditional_probabilities(X, perplexity, tol)
    return (cond + cond.T) / (2.0 * cond.shape[0])


def _kl(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], _Q_FLOOR))))


def _q_matrix(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = np.sum((Y[:, None, :] - Y[None, :, :]) ** 2, axis=-1)
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    return w / w.sum(), w


def tsne_embed(X, params: TsneParams = TsneParams()) -> Embedding2D:
    """Embed rows of X into 2D.

    The perplexity is auto-reduced to floor((n-1)/3) when the requested
    value does not fit the point count; if even that leaves no valid
    target (n < 4) the call fails.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise UsageError("X must be a matrix")
    if not np.isfinite(X).all():
        raise InputError("X contains non-finite values")
    n = X.shape[0]
    if n > MAX_POINTS:
        raise UsageError(f"exact t-SNE is capped at {MAX_POINTS} points")
    perplexity = min(params.perplexity, (n - 1) // 3)
    if perplexity < 1:
        raise PerplexityError(f"no valid perplexity for {n} points")
    if params.iters < 1 or params.learning_rate <= 0:
        raise UsageError("iters must be >= 1 and learning_rate > 0")

    P = joint_probabilities(X, perplexity)
    rng = np.random.default_rng(params.seed)
    Y = rng.normal(scale=1e-4, size=(n, 2))
    vel = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace = []

    for it in range(params.iters):
        exaggerate = it < EXAGGERATION_ITERS
        P_eff = P * EXAGGERATION_FACTOR if exaggerate else P
        Q, w = _q_matrix(Y)
        # KL against the true P, so the trace stays comparable across the
        # exaggeration boundary.
        trace.append(_kl(P, Q))
        pq = (P_eff - Q) * w
        grad = 4.0 * (np.diag(pq.sum(axis=1)) - pq) @ Y
        momentum = 0.5 if it < MOMENTUM_SWITCH_ITER else 0.8
        same_sign = np.sign(grad) == np.sign(vel)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        vel = momentum * vel - params.learning_rate * gains * grad
        Y = Y + vel
        Y = Y - Y.mean(axis=0)

    Q, _ = _q_matrix(Y)
    trace.append(_kl(P, Q))
    return Embedding2D(points=Y, kl_trace=tuple(trace), seed=params.seed)


def write_embedding_csv(stream, row_ids, points) -> None:
    """Write (rowId, x, y) rows; stream is a text file object."""
    points = np.asarray(points, dtype=float)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["rowId", "x", "y"])
    for rid, (x, y) in zip(row_ids, points):
        writer.writerow([rid, format(x, ".12g"), format(y, ".12g")])


def read_embedding_csv(data) -> tuple[tuple, np.ndarray]:
    """Inverse of write_embedding_csv; accepts a string or text stream."""
    stream = io.StringIO(data) if isinstance(data, str) else data
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["rowId", "x", "y"]:
        raise ParseError("expected header rowId,x,y", row=0, col=0)
    ids, pts = [], []
    for r, row in enumerate(reader, start=1):
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", row=r, col=0)
        try:
            pts.append((float(row[1]), float(row[2])))
        except ValueError as exc:
            raise ParseError(str(exc), row=r, col=1) from exc
        ids.append(row[0])
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate row ids", row=0, col=0)
    return tuple(ids), np.asarray(pts, dtype=float).reshape(len(ids), 2)
