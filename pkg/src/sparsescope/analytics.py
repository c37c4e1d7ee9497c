"""Progressive filtering, the exploration history tree, and axis statistics.

Filters are pure: applying the same path from the root always reproduces
the same retained set, which is what makes history replay trustworthy.
Retained ids are kept in table row order throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyColumn, InsufficientData, UsageError
from .table import DataTable


@dataclass(frozen=True)
class RangeFilter:
    attr: str
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise UsageError("range needs lo <= hi")


@dataclass(frozen=True)
class ClusterFilter:
    ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        if not self.ids:
            raise UsageError("cluster filter needs at least one id")


@dataclass(frozen=True)
class ReferenceFilter:
    ref_id: str
    top_n: int

    def __post_init__(self):
        if self.top_n < 1:
            raise UsageError("top_n must be >= 1")


FilterSpec = RangeFilter | ClusterFilter | ReferenceFilter


def apply_filter(
    table: DataTable,
    current_ids,
    spec: FilterSpec,
    embedding: dict | None = None,
) -> list:
    """Retained ids after one filter step, in table row order.

    Range keeps rows whose observed value lies in [lo, hi]; missing never
    matches.  Cluster keeps the listed ids.  Reference keeps ref_id plus
    its top_n nearest rows in the 2D embedding.  Unknown attributes or
    ids raise KeyError.
    """
    current = set(current_ids)
    if isinstance(spec, RangeFilter):
        vals, obs = table.column(spec.attr)
        keep = []
        for i, rid in enumerate(table.row_ids):
            if rid in current and obs[i] and spec.lo <= vals[i] <= spec.hi:
                keep.append(rid)
        return keep
    if isinstance(spec, ClusterFilter):
        for rid in spec.ids:
            table.row_index(rid)
        listed = set(spec.ids)
        return [rid for rid in table.row_ids if rid in current and rid in listed]
    if isinstance(spec, ReferenceFilter):
        table.row_index(spec.ref_id)
        if spec.ref_id not in current:
            raise KeyError(spec.ref_id)
        if embedding is None:
            raise UsageError("reference filtering needs an embedding")
        ref = np.asarray(embedding[spec.ref_id], dtype=float)
        ranked = []
        for order, rid in enumerate(table.row_ids):
            if rid not in current or rid == spec.ref_id or rid not in embedding:
                continue
            d = float(np.linalg.norm(np.asarray(embedding[rid], dtype=float) - ref))
            ranked.append((d, order, rid))
        ranked.sort()
        chosen = {rid for _, _, rid in ranked[: spec.top_n]} | {spec.ref_id}
        return [rid for rid in table.row_ids if rid in chosen]
    raise UsageError(f"unknown filter kind {type(spec).__name__}")


# ---------------------------------------------------------------- history


@dataclass(frozen=True)
class HistoryNode:
    node_id: int
    parent: int | None
    filter: FilterSpec | None  # None only at the root
    retained: tuple
    top_variation: tuple | None  # (attr, F)

    @property
    def retained_count(self) -> int:
        return len(self.retained)


class HistoryTree:
    """Single-rooted tree of filter steps; children retain subsets of parents."""

    def __init__(self, all_ids):
        root = HistoryNode(0, None, None, tuple(all_ids), None)
        self.nodes: dict[int, HistoryNode] = {0: root}

    @property
    def root(self) -> HistoryNode:
        return self.nodes[0]

    def node(self, node_id: int) -> HistoryNode:
        if node_id not in self.nodes:
            raise KeyError(node_id)
        return self.nodes[node_id]

    def add_child(
        self, parent_id: int, spec: FilterSpec, retained, top_variation=None
    ) -> HistoryNode:
        parent = self.node(parent_id)
        retained = tuple(retained)
        if not set(retained) <= set(parent.retained):
            raise UsageError("child retains ids its parent does not")
        child = HistoryNode(len(self.nodes), parent_id, spec, retained, top_variation)
        self.nodes[child.node_id] = child
        return child

    def path(self, node_id: int) -> list:
        """Filters from the root down to node_id."""
        chain = []
        node = self.node(node_id)
        while node.parent is not None:
            chain.append(node.filter)
            node = self.node(node.parent)
        return list(reversed(chain))


def _filter_to_json(spec: FilterSpec | None):
    if spec is None:
        return None
    if isinstance(spec, RangeFilter):
        return {"kind": "range", "attr": spec.attr, "lo": spec.lo, "hi": spec.hi}
    if isinstance(spec, ClusterFilter):
        return {"kind": "cluster", "ids": list(spec.ids)}
    return {"kind": "reference", "refId": spec.ref_id, "topN": spec.top_n}


def _variation_to_json(tv):
    if tv is None:
        return None
    attr, f = tv
    # +inf cannot travel in strict JSON; flag it and null the number
    if math.isinf(f):
        return {"attr": attr, "f": None, "infinite": True}
    return {"attr": attr, "f": f, "infinite": False}


def history_to_json(tree: HistoryTree) -> dict:
    nodes = [
        {
            "id": n.node_id,
            "parent": n.parent,
            "filter": _filter_to_json(n.filter),
            "retainedCount": n.retained_count,
            "topVariationAttr": _variation_to_json(n.top_variation),
        }
        for n in sorted(tree.nodes.values(), key=lambda n: n.node_id)
    ]
    edges = [
        {"from": n.parent, "to": n.node_id, "retainedCount": n.retained_count}
        for n in sorted(tree.nodes.values(), key=lambda n: n.node_id)
        if n.parent is not None
    ]
    return {"nodes": nodes, "edges": edges, "root": 0}


# ------------------------------------------------------------------ anova


def anova_top_attribute(table: DataTable, group_labels) -> tuple:
    """Attribute with the highest one-way F over the given row groups.

    F = (SSB/(K-1)) / (SSW/(n-K)) on observed values.  Zero within-group
    variance with spread-out means yields +inf, ranked above any finite
    F.  Attributes where a group loses all observed values are skipped.
    """
    labels = np.asarray(group_labels)
    if labels.shape[0] != table.n_rows:
        raise UsageError("group labels do not match rows")
    uniq = list(dict.fromkeys(labels.tolist()))
    if len(uniq) < 2:
        raise InsufficientData("need at least two groups")
    if any(int(np.sum(labels == g)) < 2 for g in uniq):
        raise InsufficientData("every group needs at least two members")

    best = None
    for j, attr in enumerate(table.names):
        obs = table.observed[:, j]
        groups = []
        for g in uniq:
            vals = table.values[(labels == g) & obs, j]
            if vals.size == 0:
                groups = None
                break
            groups.append(vals)
        if groups is None:
            continue
        n = sum(v.size for v in groups)
        k = len(groups)
        if n - k < 1:
            continue
        grand = float(np.concatenate(groups).mean())
        ssb = sum(v.size * (float(v.mean()) - grand) ** 2 for v in groups)
        ssw = sum(float(((v - v.mean()) ** 2).sum()) for v in groups)
        if ssw <= 0.0:
            f = math.inf if ssb > 0.0 else 0.0
        else:
            f = (ssb / (k - 1)) / (ssw / (n - k))
        if best is None or (-f, attr) < (-best[1], best[0]):
            best = (attr, f)
    if best is None:
        raise InsufficientData("no attribute has observed values in every group")
    return best


# ------------------------------------------------------------- axis stats


@dataclass(frozen=True)
class AxisStats:
    attr: str
    group: str
    quantiles: dict  # min, q1, median, q3, max
    bin_edges: tuple
    bin_counts: tuple


def axis_stats(table: DataTable, attr: str, bins: int = 10) -> AxisStats:
    """Box-plot quantiles and an equal-width histogram of one column."""
    if bins < 1:
        raise UsageError("bins must be >= 1")
    j = table.col_index(attr)
    vals = table.values[table.observed[:, j], j]
    if vals.size == 0:
        raise EmptyColumn(attr)
    q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
    lo, hi = float(q[0]), float(q[4])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    return AxisStats(
        attr=attr,
        group=table.groups[j],
        quantiles={
            "min": float(q[0]),
            "q1": float(q[1]),
            "median": float(q[2]),
            "q3": float(q[3]),
            "max": float(q[4]),
        },
        bin_edges=tuple(float(e) for e in edges),
        bin_counts=tuple(int(c) for c in counts),
    )


# ----------------------------------------------------- uncertainty scatter


def uncertainty_pairs(pairs, uncertainties: dict, row_ids) -> list:
    """Scatter payload per adjacent attribute pair.

    A row missing both uncertainties is omitted; missing exactly one
    puts that coordinate at 0 and flags the point as partial.
    """
    out = []
    for a, b in pairs:
        ua = uncertainties.get(a, {})
        ub = uncertainties.get(b, {})
        points = []
        for rid in row_ids:
            va, vb = ua.get(rid), ub.get(rid)
            if va is None and vb is None:
                continue
            points.append(
                {
                    "id": rid,
                    "x": float(va) if va is not None else 0.0,
                    "y": float(vb) if vb is not None else 0.0,
                    "partial": va is None or vb is None,
                }
            )
        out.append({"attrs": [a, b], "points": points})
    return out
