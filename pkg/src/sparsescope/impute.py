"""Correlation-aware multivariate imputation and baseline imputers.

The main imputer fills each missing cell from the mean of the target
column over the rows most similar to the incomplete row, where similarity
is measured only on that column's most correlated helper columns.  Helper
columns are mean-filled inside the temporary similarity subset; imputed
values are never fed back into later similarity searches, so column
passes are independent of each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCandidates, EmptyColumn, EmptyInput, EmptyResult, ImputeError, UsageError
from .table import IMPUTED, DataTable, new_provenance


@dataclass(frozen=True)
class CamiParams:
    """Thresholds and neighborhood sizes for the imputation pipeline.

    a/b are the column/row missing-fraction cutoffs (a cell fraction >= the
    cutoff drops the column or row); c is how many correlated helper
    columns to use and d how many similar rows to average.
    """

    a: float = 0.6
    b: float = 0.6
    c: int = 5
    d: int = 5

    def validate(self):
        if not 0.0 < self.a <= 1.0:
            raise UsageError("a must lie in (0, 1]")
        if not 0.0 < self.b <= 1.0:
            raise UsageError("b must lie in (0, 1]")
        if self.c < 1:
            raise UsageError("c must be >= 1")
        if self.d < 1:
            raise UsageError("d must be >= 1")


@dataclass
class CorrelationMatrix:
    """Pairwise-complete Pearson matrix; NaN marks undefined entries."""

    attrs: tuple
    r: np.ndarray

    def get(self, a: str, b: str) -> float:
        return self.r[self.attrs.index(a), self.attrs.index(b)]


@dataclass
class ImputationReport:
    """Audit record of one imputation run."""

    dropped_columns: list = field(default_factory=list)
    dropped_rows: list = field(default_factory=list)
    filled_cells: list = field(default_factory=list)  # (row_id, col, value, neighbor_ids)
    per_column_neighbors: dict = field(default_factory=dict)  # col -> helper columns K

    def to_dict(self) -> dict:
        return {
            "droppedColumns": list(self.dropped_columns),
            "droppedRows": list(self.dropped_rows),
            "filledCells": [
                {"row": r, "col": c, "value": v, "neighborIds": list(n)}
                for r, c, v, n in self.filled_cells
            ],
            "perColumnNeighbors": {c: list(k) for c, k in self.per_column_neighbors.items()},
        }


def threshold_filter(table: DataTable, params: CamiParams):
    """Drop columns with missing fraction >= a, then rows with missing
    fraction >= b computed on the surviving columns.

    Returns (filtered, dropped_columns, dropped_rows).  Dropped items are
    reported and never imputed.
    """
    params.validate()
    if table.n_rows == 0 or table.n_cols == 0:
        raise EmptyInput("threshold_filter requires a nonempty table")
    miss = ~table.observed
    col_frac = miss.mean(axis=0)
    keep_cols = np.where(col_frac < params.a)[0]
    dropped_cols = [table.names[j] for j in np.where(col_frac >= params.a)[0]]
    if keep_cols.size == 0:
        raise EmptyResult("every column exceeds the missing-fraction threshold")
    row_frac = miss[:, keep_cols].mean(axis=1)
    keep_rows = np.where(row_frac < params.b)[0]
    dropped_rows = [table.row_ids[i] for i in np.where(row_frac >= params.b)[0]]
    filtered = table.subset(row_idx=keep_rows, col_idx=keep_cols)
    return filtered, dropped_cols, dropped_rows


def pairwise_pearson(table: DataTable) -> CorrelationMatrix:
    """Pearson correlation over pairwise-complete observations.

    An entry is undefined (NaN) when fewer than two rows observe both
    columns or either column is constant on those rows.
    """
    if table.n_cols < 2:
        raise EmptyInput("pairwise_pearson requires at least 2 columns")
    m = table.n_cols
    r = np.full((m, m), np.nan)
    for i in range(m):
        for j in range(i, m):
            both = table.observed[:, i] & table.observed[:, j]
            if both.sum() < 2:
                continue
            x = table.values[both, i]
            y = table.values[both, j]
            sx = x.std()
            sy = y.std()
            if sx == 0.0 or sy == 0.0:
                continue
            rij = float(np.corrcoef(x, y)[0, 1])
            r[i, j] = r[j, i] = min(1.0, max(-1.0, rij))
    return CorrelationMatrix(attrs=table.names, r=r)


def top_correlated(cm: CorrelationMatrix, target: str, c: int) -> list:
    """The c columns most correlated (by |r|) with the target.

    Undefined entries are excluded; ties break by ascending column name.
    """
    if target not in cm.attrs:
        raise KeyError(target)
    ti = cm.attrs.index(target)
    candidates = []
    for j, name in enumerate(cm.attrs):
        if j == ti or np.isnan(cm.r[ti, j]):
            continue
        candidates.append((-abs(cm.r[ti, j]), name))
    candidates.sort()
    return [name for _, name in candidates[:c]]


def knn_similar_rows(subset: DataTable, query: int, candidates, d: int) -> list:
    """Ids of the d candidate rows nearest the query row.

    Distance is Euclidean over the subset's columns (expected to be the
    mean-filled helper columns).  Ties break by ascending row id.
    """
    cand = list(candidates)
    if not cand:
        raise EmptyCandidates("similarity search needs at least one candidate row")
    q = subset.values[query, :]
    ranked = sorted(
        cand,
        key=lambda i: (float(np.linalg.norm(subset.values[i, :] - q)), subset.row_ids[i]),
    )
    return [subset.row_ids[i] for i in ranked[: min(d, len(ranked))]]


def _observed_means(table: DataTable) -> np.ndarray:
    means = np.empty(table.n_cols)
    for j in range(table.n_cols):
        obs = table.observed[:, j]
        means[j] = table.values[obs, j].mean() if obs.any() else np.nan
    return means


def cami_impute(table: DataTable, params: CamiParams = CamiParams()):
    """Full correlation-aware imputation pass.

    Filters by the missing thresholds, then fills every surviving missing
    cell column by column (ascending missing count, name tiebreak).  For a
    target column Y: pick the top-c correlated helpers K, mean-fill K
    inside a temporary subset, split rows into L (Y missing) and M (Y
    observed), and fill each L-row with the mean of Y over its top-d
    nearest M-rows in K-space.  Fills never feed later similarity
    searches; each column's own pass supersedes any transient mean fill.

    Returns (imputed_table, provenance, report).
    """
    params.validate()
    filtered, dropped_cols, dropped_rows = threshold_filter(table, params)
    report = ImputationReport(dropped_columns=dropped_cols, dropped_rows=dropped_rows)
    provenance = new_provenance(filtered)
    out_values = filtered.values.copy()
    out_observed = filtered.observed.copy()

    missing_counts = (~filtered.observed).sum(axis=0)
    targets = sorted(
        (j for j in range(filtered.n_cols) if missing_counts[j] > 0),
        key=lambda j: (missing_counts[j], filtered.names[j]),
    )
    if not targets:
        return filtered, provenance, report

    cm = pairwise_pearson(filtered) if filtered.n_cols >= 2 else None
    means = _observed_means(filtered)

    for tj in targets:
        y_name = filtered.names[tj]
        helpers = top_correlated(cm, y_name, params.c) if cm is not None else []
        report.per_column_neighbors[y_name] = helpers
        helper_idx = [filtered.col_index(h) for h in helpers]

        # Temporary similarity space: helper columns with original observed
        # values, mean-filled where missing.  Never contains prior fills.
        sim = filtered.values[:, helper_idx].copy()
        for k, hj in enumerate(helper_idx):
            hole = ~filtered.observed[:, hj]
            sim[hole, k] = means[hj]

        y_obs = filtered.observed[:, tj]
        m_rows = np.where(y_obs)[0]
        l_rows = np.where(~y_obs)[0]
        if m_rows.size == 0:
            raise ImputeError(y_name, f"no observed values to draw from for {y_name!r}")

        for p in l_rows:
            dists = np.linalg.norm(sim[m_rows] - sim[p], axis=1)
            order = sorted(range(m_rows.size), key=lambda k: (dists[k], filtered.row_ids[m_rows[k]]))
            chosen = [m_rows[k] for k in order[: min(params.d, m_rows.size)]]
            value = float(filtered.values[chosen, tj].mean())
            out_values[p, tj] = value
            out_observed[p, tj] = True
            provenance[p, tj] = IMPUTED
            report.filled_cells.append(
                (filtered.row_ids[p], y_name, value, [filtered.row_ids[k] for k in chosen])
            )

    imputed = filtered.with_values(out_values, out_observed)
    return imputed, provenance, report


def baseline_impute(table: DataTable, method: str) -> DataTable:
    """Fill every missing cell with a per-column statistic.

    method is one of "mean", "zero", "most_frequent"; the modal value
    breaks ties toward the smallest value.
    """
    if method not in ("mean", "zero", "most_frequent"):
        raise UsageError(f"unknown imputation method {method!r}")
    values = table.values.copy()
    for j, name in enumerate(table.names):
        hole = ~table.observed[:, j]
        if not hole.any():
            continue
        if method == "zero":
            fill = 0.0
        else:
            obs = table.values[table.observed[:, j], j]
            if obs.size == 0:
                raise EmptyColumn(name)
            if method == "mean":
                fill = float(obs.mean())
            else:
                vals, counts = np.unique(obs, return_counts=True)
                fill = float(vals[np.argmax(counts)])  # unique() sorts, argmax takes first max
        values[hole, j] = fill
    return table.with_values(values, np.ones_like(table.observed))
