"""Gradient boosting of Gaussian (mu, sigma) with natural-gradient steps.

Each stage fits two depth-limited regression trees: one to the negative
natural gradient of the mean, one to that of the log standard deviation.
With a diagonal Fisher matrix the two targets have closed forms

    target_mu     = y - mu
    target_logsig = 0.5 * ((y - mu)^2 / sigma^2 - 1)

A halving line search per stage is folded into the leaf values, so the
training negative log-likelihood is strictly decreasing over recorded
stages and prediction stays plain ``init + lr * sum(trees)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ShapeError, UndefinedRSD, UsageError

_LOG_2PI = math.log(2.0 * math.pi)


def rsd(mu: float, sigma: float) -> float:
    """Relative standard deviation in percent, 100*sigma/|mu|."""
    if sigma < 0:
        raise UsageError("sigma must be non-negative")
    if mu == 0:
        raise UndefinedRSD("rsd is undefined at mu=0")
    return 100.0 * sigma / abs(mu)


@dataclass(frozen=True)
class BoostParams:
    stages: int = 300
    depth: int = 3
    learning_rate: float = 0.05
    sigma_floor: float = 1e-3
    seed: int = 0

    def validate(self) -> None:
        if self.stages < 0:
            raise UsageError("stages must be >= 0")
        if self.depth < 1:
            raise UsageError("depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise UsageError("learning_rate must be in (0, 1]")
        if self.sigma_floor <= 0:
            raise UsageError("sigma_floor must be > 0")


@dataclass(frozen=True)
class ProbModel:
    """Fitted booster: init parameters plus per-stage tree pairs."""

    mu0: float
    sigma0: float
    learning_rate: float
    sigma_floor: float
    n_features: int
    mu_trees: tuple
    sigma_trees: tuple
    train_nll: tuple

    @property
    def n_stages(self) -> int:
        return len(self.mu_trees)


@dataclass(frozen=True)
class ProbPrediction:
    mu: float
    sigma: float
    rsd_percent: float | None  # None when mu == 0


# Trees are nested dicts: {"f": int, "t": float, "l": node, "r": node}
# for internal nodes and {"v": float} for leaves.


def _grow(X: np.ndarray, g: np.ndarray, depth: int) -> dict:
    n = g.shape[0]
    mean = float(g.mean())
    if depth == 0 or n < 2:
        return {"v": mean}
    node_sse = float(np.sum(g * g) - n * mean * mean)
    best = None  # (sse, feature, threshold)
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        gs = g[order]
        cs = np.cumsum(gs)
        css = np.cumsum(gs * gs)
        k = np.arange(1, n, dtype=float)
        valid = xs[1:] != xs[:-1]
        if not valid.any():
            continue
        left = css[:-1] - cs[:-1] ** 2 / k
        rsum = cs[-1] - cs[:-1]
        rsq = css[-1] - css[:-1]
        right = rsq - rsum**2 / (n - k)
        sse = left + right
        sse[~valid] = np.inf
        i = int(np.argmin(sse))
        if best is None or sse[i] < best[0] - 1e-12:
            best = (float(sse[i]), j, 0.5 * (xs[i] + xs[i + 1]))
    if best is None or best[0] >= node_sse - 1e-12:
        return {"v": mean}
    _, j, thr = best
    mask = X[:, j] <= thr
    return {
        "f": j,
        "t": thr,
        "l": _grow(X[mask], g[mask], depth - 1),
        "r": _grow(X[~mask], g[~mask], depth - 1),
    }


def _tree_predict(node: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if "v" in nd:
            out[idx] = nd["v"]
            continue
        mask = X[idx, nd["f"]] <= nd["t"]
        stack.append((nd["l"], idx[mask]))
        stack.append((nd["r"], idx[~mask]))
    return out


def _scale_leaves(node: dict, s: float) -> None:
    if "v" in node:
        node["v"] *= s
    else:
        _scale_leaves(node["l"], s)
        _scale_leaves(node["r"], s)


def _sigma_of(sigma0: float, shift: np.ndarray, floor: float) -> np.ndarray:
    # sigma0 * exp(shift) rather than exp(log sigma0 + shift): with no
    # shift the result is sigma0 bit-exactly, which the floor case needs.
    return np.maximum(sigma0 * np.exp(shift), floor)


def _mean_nll(y: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> float:
    z = (y - mu) / sigma
    return float(np.mean(np.log(sigma) + 0.5 * z * z + 0.5 * _LOG_2PI))


def fit_ngb(X, y, params: BoostParams = BoostParams()) -> ProbModel:
    """Fit the booster to a complete feature matrix and target vector.

    Stops early once a stage cannot reduce the training NLL even after
    thirty halvings of its step, which covers the constant-target case.
    """
    params.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"X {X.shape} does not match y {y.shape}")
    if y.shape[0] < 5:
        raise UsageError("need at least 5 training rows")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise InputError("training data contains non-finite values")

    # a constant target must reproduce c bit-exactly; np.mean of n copies
    # of c can drift by an ulp, so bypass it in that case
    mu0 = float(y[0]) if (y == y[0]).all() else float(y.mean())
    sigma0 = max(float(y.std()), params.sigma_floor)
    lr = params.learning_rate
    mu = np.full(y.shape[0], mu0)
    shift = np.zeros(y.shape[0])  # accumulated log-sigma offset
    nll = _mean_nll(y, mu, _sigma_of(sigma0, shift, params.sigma_floor))
    trace = [nll]
    mu_trees: list[dict] = []
    sigma_trees: list[dict] = []

    for _ in range(params.stages):
        sigma = _sigma_of(sigma0, shift, params.sigma_floor)
        resid = y - mu
        g_mu = resid
        g_ls = 0.5 * ((resid / sigma) ** 2 - 1.0)
        t_mu = _grow(X, g_mu, params.depth)
        t_ls = _grow(X, g_ls, params.depth)
        d_mu = _tree_predict(t_mu, X)
        d_ls = _tree_predict(t_ls, X)
        step = 1.0
        accepted = False
        for _ in range(30):
            cand = _mean_nll(
                y,
                mu + lr * step * d_mu,
                _sigma_of(sigma0, shift + lr * step * d_ls, params.sigma_floor),
            )
            if cand < nll:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        _scale_leaves(t_mu, step)
        _scale_leaves(t_ls, step)
        mu = mu + lr * step * d_mu
        shift = shift + lr * step * d_ls
        nll = cand
        trace.append(nll)
        mu_trees.append(t_mu)
        sigma_trees.append(t_ls)

    return ProbModel(
        mu0=mu0,
        sigma0=sigma0,
        learning_rate=lr,
        sigma_floor=params.sigma_floor,
        n_features=X.shape[1],
        mu_trees=tuple(mu_trees),
        sigma_trees=tuple(sigma_trees),
        train_nll=tuple(trace),
    )


def predict_ngb_batch(model: ProbModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Predict (mu, sigma) arrays for a matrix of feature rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} features, got shape {X.shape}")
    mu = np.full(X.shape[0], model.mu0)
    shift = np.zeros(X.shape[0])
    for t_mu, t_ls in zip(model.mu_trees, model.sigma_trees):
        mu += model.learning_rate * _tree_predict(t_mu, X)
        shift += model.learning_rate * _tree_predict(t_ls, X)
    return mu, _sigma_of(model.sigma0, shift, model.sigma_floor)


def predict_ngb(model: ProbModel, x) -> ProbPrediction:
    """Predict a single feature vector; rsd_percent is None at mu=0."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("predict_ngb takes a single feature vector")
    mu, sigma = predict_ngb_batch(model, x[None, :])
    m, s = float(mu[0]), float(sigma[0])
    return ProbPrediction(mu=m, sigma=s, rsd_percent=None if m == 0 else rsd(m, s))
