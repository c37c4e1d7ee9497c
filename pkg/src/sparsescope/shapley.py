"""Exact Shapley attribution and glyph influence assembly.

Attribution is exact: all 2^m coalitions are enumerated with the usual
combinatorial weights, which caps m at 12.  Callers with more features
pre-select (the session layer ranks by |correlation| first).  Attributes
that are not model outputs get Pearson correlation as their importance.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import TooManyFeatures, TooManyKeyAttrs, UndefinedCorrelation, UsageError
from .impute import pairwise_pearson
from .table import DataTable

MAX_EXACT_FEATURES = 12

PREDICTED = "predicted"
OTHER = "other"


@dataclass(frozen=True)
class Attribution:
    feature: str
    phi: float
    rank: int  # 1 = largest |phi|


@dataclass(frozen=True)
class Influence:
    factor: str
    strength: float  # |r| or normalized global |phi|, in [0, 1]
    direction: str  # "positive" | "negative"


@dataclass(frozen=True)
class InfluenceContext:
    """Data backing influencing_factors.

    local_phi maps a predicted attribute to (feature names, per-compound
    phi matrix) produced by shapley_exact over some set of compounds.
    """

    table: DataTable
    local_phi: Mapping[str, tuple[Sequence[str], np.ndarray]]


def shapley_exact(
    value_fn: Callable[[np.ndarray], float],
    x,
    background,
    features: Sequence[str],
) -> list[Attribution]:
    """Exact Shapley values of value_fn at x against a background point.

    A coalition's value is value_fn applied to x with the out-of-coalition
    entries replaced by the background.  Returns attributions in feature
    order, ranked by decreasing |phi| (name tiebreak).
    """
    m = len(features)
    if m > MAX_EXACT_FEATURES:
        raise TooManyFeatures(f"{m} features exceed the exact-enumeration cap of {MAX_EXACT_FEATURES}")
    if m == 0:
        raise UsageError("need at least one feature")
    x = np.asarray(x, dtype=float)
    background = np.asarray(background, dtype=float)
    if x.shape != (m,) or background.shape != (m,):
        raise UsageError("x and background must match the feature list")

    values = np.empty(1 << m)
    blend = np.empty(m)
    for mask in range(1 << m):
        for i in range(m):
            blend[i] = x[i] if mask >> i & 1 else background[i]
        values[mask] = float(value_fn(blend.copy()))

    fact = [factorial(i) for i in range(m + 1)]
    weight = [fact[s] * fact[m - s - 1] / fact[m] for s in range(m)]
    phi = np.zeros(m)
    for mask in range(1 << m):
        s = bin(mask).count("1")
        for i in range(m):
            if not mask >> i & 1:
                phi[i] += weight[s] * (values[mask | 1 << i] - values[mask])

    order = sorted(range(m), key=lambda i: (-abs(phi[i]), features[i]))
    rank = {i: pos + 1 for pos, i in enumerate(order)}
    return [Attribution(feature=features[i], phi=float(phi[i]), rank=rank[i]) for i in range(m)]


def global_importance(phi_matrix, features: Sequence[str]) -> list[tuple[str, float]]:
    """Mean |phi| per feature over compounds, descending (name tiebreak)."""
    phi_matrix = np.atleast_2d(np.asarray(phi_matrix, dtype=float))
    if phi_matrix.size == 0 or phi_matrix.shape[1] != len(features):
        raise UsageError("phi matrix must be nonempty and match the feature list")
    scores = np.mean(np.abs(phi_matrix), axis=0)
    order = sorted(range(len(features)), key=lambda i: (-scores[i], features[i]))
    return [(features[i], float(scores[i])) for i in order]


def correlation_importance(table: DataTable, key_attr: str) -> list[tuple[str, float]]:
    """Other attributes ranked by |pairwise Pearson r| against key_attr.

    Pairs whose correlation is undefined (constant column or fewer than
    two shared rows) are omitted; a constant key attribute is an error.
    """
    j = table.col_index(key_attr)
    obs = table.values[table.observed[:, j], j]
    if obs.size == 0 or np.ptp(obs) == 0:
        raise UndefinedCorrelation(f"{key_attr!r} is constant over its observed rows")
    cm = pairwise_pearson(table)
    pairs = []
    for name in table.names:
        if name == key_attr:
            continue
        r = cm.get(key_attr, name)
        if np.isfinite(r):
            pairs.append((name, float(r)))
    pairs.sort(key=lambda p: (-abs(p[1]), p[0]))
    return pairs


def _predicted_factors(context: InfluenceContext, attr: str) -> list[Influence]:
    if attr not in context.local_phi:
        raise UsageError(f"no local attributions recorded for predicted attribute {attr!r}")
    features, phi = context.local_phi[attr]
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    ranked = global_importance(phi, features)
    top = max((s for _, s in ranked), default=0.0)
    signed_mean = {f: float(np.mean(phi[:, i])) for i, f in enumerate(features)}
    out = []
    for name, score in ranked:
        strength = score / top if top > 0 else 0.0
        direction = "negative" if signed_mean[name] < 0 else "positive"
        out.append(Influence(factor=name, strength=strength, direction=direction))
    return out


def _pearson_factors(context: InfluenceContext, attr: str) -> list[Influence]:
    out = []
    for name, r in correlation_importance(context.table, attr):
        out.append(
            Influence(factor=name, strength=abs(r), direction="negative" if r < 0 else "positive")
        )
    return out


def influencing_factors(
    key_attrs: Sequence[str],
    sources: Mapping[str, str],
    context: InfluenceContext,
) -> dict[str, list[Influence]]:
    """Top-k influences per key attribute, k = floor(15/n).

    Factors are shared between sectors when they influence several key
    attributes; each sector is ordered by decreasing strength.
    """
    n = len(key_attrs)
    if n == 0:
        raise UsageError("need at least one key attribute")
    if n > 15:
        raise TooManyKeyAttrs(f"{n} key attributes leave no glyph budget (k would be 0)")
    k = 15 // n
    out: dict[str, list[Influence]] = {}
    for attr in key_attrs:
        source = sources.get(attr, OTHER)
        if source not in (PREDICTED, OTHER):
            raise UsageError(f"unknown source kind {source!r} for {attr!r}")
        factors = (
            _predicted_factors(context, attr)
            if source == PREDICTED
            else _pearson_factors(context, attr)
        )
        out[attr] = factors[:k]
    return out
