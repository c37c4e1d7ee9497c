"""Leave-out evaluation harness for predictors over (possibly imputed) tables.

A model spec is a name plus a ``run(X, y, train_idx, test_idx)`` callable
returning predictions for the test rows; passing the full ``y`` lets a
perfect-oracle spec exist for calibrating the harness itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .boost import BoostParams, fit_ngb, predict_ngb_batch
from .errors import InputError, InsufficientData, UndefinedMAPE
from .impute import CamiParams, baseline_impute, cami_impute
from .table import DataTable

HOLDOUT_SIZE = 3


@dataclass(frozen=True)
class ModelSpec:
    name: str
    run: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def booster_spec(name: str = "booster", params: BoostParams = BoostParams()) -> ModelSpec:
    def run(X, y, train_idx, test_idx):
        model = fit_ngb(X[train_idx], y[train_idx], params)
        mu, _ = predict_ngb_batch(model, X[test_idx])
        return mu

    return ModelSpec(name=name, run=run)


def mean_spec(name: str = "mean-predictor") -> ModelSpec:
    def run(X, y, train_idx, test_idx):
        return np.full(len(test_idx), y[train_idx].mean())

    return ModelSpec(name=name, run=run)


def knn_spec(k: int = 5, name: str = "knn-predictor") -> ModelSpec:
    def run(X, y, train_idx, test_idx):
        kk = min(k, len(train_idx))
        preds = np.empty(len(test_idx))
        for i, t in enumerate(test_idx):
            d = np.linalg.norm(X[train_idx] - X[t], axis=1)
            order = np.lexsort((train_idx, d))  # distance, then stable row order
            preds[i] = y[train_idx[order[:kk]]].mean()
        return preds

    return ModelSpec(name=name, run=run)


def oracle_spec(name: str = "oracle") -> ModelSpec:
    def run(X, y, train_idx, test_idx):
        return y[test_idx].copy()

    return ModelSpec(name=name, run=run)


def loo_evaluate(
    table: DataTable,
    target: str,
    models: Sequence[ModelSpec],
    repeats: int = 5,
    seed: int = 0,
) -> dict[str, float]:
    """Repeated 3-sample-holdout MAPE for each model spec.

    Every spec sees the same splits.  Terms where the held-out truth is
    zero are excluded from the mean, matching mape_reconstruction.
    """
    tcol = table.col_index(target)
    feat_cols = [j for j in range(table.n_cols) if j != tcol]
    labeled = np.flatnonzero(table.observed[:, tcol])
    if labeled.size < HOLDOUT_SIZE + 1:
        raise InsufficientData(f"need at least {HOLDOUT_SIZE + 1} labeled rows")
    X = table.values[:, feat_cols]
    if not np.isfinite(X[labeled]).all():
        raise InputError("feature cells of labeled rows must be complete")
    y = table.values[:, tcol]

    rng = np.random.default_rng(seed)
    splits = []
    for _ in range(repeats):
        test = np.sort(rng.choice(labeled, size=HOLDOUT_SIZE, replace=False))
        train = np.setdiff1d(labeled, test)
        splits.append((train, test))

    out = {}
    for spec in models:
        terms: list[float] = []
        for train, test in splits:
            preds = np.asarray(spec.run(X, y, train, test), dtype=float)
            for yt, p in zip(y[test], preds):
                if yt != 0:
                    terms.append(abs((yt - p) / yt))
        if not terms:
            raise UndefinedMAPE("every held-out truth value is zero")
        out[spec.name] = float(np.mean(terms)) * 100.0
    return out


IMPUTERS = ("mean", "zero", "most_frequent", "CAMI")


def _impute_with(table: DataTable, method: str, cami_params: CamiParams) -> DataTable:
    if method == "CAMI":
        out, _, _ = cami_impute(table, cami_params)
        return out
    return baseline_impute(table, method)


def comparison_table(
    masked: DataTable,
    target: str,
    predictors: Sequence[ModelSpec],
    repeats: int = 5,
    seed: int = 0,
    imputers: Sequence[str] = IMPUTERS,
    cami_params: CamiParams | None = None,
) -> dict[str, dict[str, float]]:
    """MAPE grid over imputation method x predictor.

    Each imputer fills the feature columns; the target column keeps its
    original missingness so the harness only scores rows whose truth was
    actually observed.  CAMI runs with non-dropping thresholds so every
    imputer sees the same rows.
    """
    params = cami_params or CamiParams(a=1.0, b=1.0)
    tcol = masked.col_index(target)
    grid: dict[str, dict[str, float]] = {}
    for method in imputers:
        filled = _impute_with(masked, method, params)
        values = filled.values.copy()
        observed = filled.observed.copy()
        values[:, tcol] = masked.values[:, tcol]
        observed[:, tcol] = masked.observed[:, tcol]
        scored = masked.with_values(values, observed)
        grid[method] = loo_evaluate(scored, target, predictors, repeats=repeats, seed=seed)
    return grid
