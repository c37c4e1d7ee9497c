"""One exploration session: imputed data, fitted targets, embedding, history.

The build pipeline fills feature columns by correlation-aware imputation,
fits a probabilistic booster per target column and predicts the missing
target cells (with relative-standard-deviation uncertainty), embeds the
key attributes plus their influencing factors, and clusters the result.
Every step is seeded, so rebuilding a session from the same inputs gives
byte-identical payloads.  Each build step is tagged, and a failure
surfaces as StageFailure naming the step that broke.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field

import numpy as np

from .analytics import (
    ClusterFilter,
    FilterSpec,
    HistoryTree,
    RangeFilter,
    ReferenceFilter,
    anova_top_attribute,
    apply_filter,
    axis_stats,
    history_to_json,
    uncertainty_pairs,
)
from .boost import BoostParams, fit_ngb, predict_ngb_batch
from .cluster import ClusterLabels, dbscan, knee_eps
from .embedding import TsneParams, tsne_embed
from .errors import (
    BusyError,
    EmptyColumn,
    EmptyInput,
    EmptyResult,
    InsufficientData,
    SparseScopeError,
    StageFailure,
    UsageError,
)
from .impute import CamiParams, cami_impute, pairwise_pearson
from .layout.sampling import density_sample
from .layout.scene import SceneParams, _poly_to_json, assemble_scene
from .shapley import (
    OTHER,
    PREDICTED as SOURCE_PREDICTED,
    InfluenceContext,
    influencing_factors,
    shapley_exact,
)
from .table import (
    IMPUTED,
    OBSERVED,
    PREDICTED,
    DataTable,
    PROVENANCE_NAMES,
    normalize_minmax,
)

MAX_KEY_ATTRS = 15
MAX_SHAP_FEATURES = 12
CELL_SHAPES = {OBSERVED: "rect", IMPUTED: "triangle", PREDICTED: "circle"}
_ELEMENT = re.compile(r"([A-Z][a-z]?)(\d*)")


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 0
    targets: tuple = ()
    col_threshold: float = 0.6
    row_threshold: float = 0.6
    helpers: int = 5
    neighbors: int = 5
    stages: int = 300
    perplexity: float = 30.0
    tsne_iters: int = 1000
    eps: float | None = None
    min_pts: int = 4
    bins: int = 10
    sample_target: int = 100
    glyph_radius: float = 0.012
    buffer_radius: float = 0.04


def formula_key(formula: str) -> tuple:
    """Normalized element multiset of a formula-like id, for row ordering.

    Counts are reduced by their gcd so Mo2S4 sorts with MoS2; strings
    with no element symbols give the empty key.
    """
    counts: dict[str, int] = {}
    for sym, num in _ELEMENT.findall(formula):
        counts[sym] = counts.get(sym, 0) + (int(num) if num else 1)
    if not counts:
        return ()
    g = math.gcd(*counts.values())
    return tuple(sorted((el, n // g) for el, n in counts.items()))


class Session:
    """State and operations behind one session id."""

    def __init__(self, session_id: str, table: DataTable, config: SessionConfig):
        self.session_id = session_id
        self.config = config
        self._job_lock = threading.Lock()
        self._discovery_cache: dict = {}
        self._build(table)

    # ------------------------------------------------------------- build

    def _build(self, raw: DataTable) -> None:
        cfg = self.config
        targets = tuple(cfg.targets)

        for t in targets:
            try:
                raw.col_index(t)
            except KeyError:
                raise UsageError(f"unknown target column {t!r}") from None
        feat_names = [n for n in raw.names if n not in targets]
        if not feat_names:
            raise UsageError("every column is a target; nothing to impute from")

        # impute the feature columns; target columns stay out of CAMI and
        # are predicted below instead
        try:
            params = CamiParams(
                a=cfg.col_threshold, b=cfg.row_threshold, c=cfg.helpers, d=cfg.neighbors
            )
            imp, prov_feat, self.report = cami_impute(raw.select_columns(feat_names), params)
            if imp.n_rows == 0 or imp.n_cols == 0:
                raise EmptyResult("threshold filtering removed everything")
        except (EmptyResult, EmptyColumn) as e:
            raise StageFailure("threshold_filter", e) from e
        except StageFailure:
            raise
        except Exception as e:
            raise StageFailure("impute", e) from e

        kept_rows = [raw.row_index(r) for r in imp.row_ids]
        names = tuple(n for n in raw.names if n in set(imp.names) or n in targets)
        values = np.empty((len(kept_rows), len(names)))
        observed = np.zeros(values.shape, dtype=bool)
        provenance = np.full(values.shape, OBSERVED, dtype=np.uint8)
        for j, name in enumerate(names):
            if name in targets:
                cj = raw.col_index(name)
                col = raw.values[:, cj][kept_rows]
                obs = raw.observed[:, cj][kept_rows]
            else:
                sj = imp.col_index(name)
                col, obs = imp.values[:, sj], imp.observed[:, sj]
                provenance[:, j] = prov_feat[:, sj]
            values[:, j] = col
            observed[:, j] = obs

        self.models: dict = {}
        self.uncertainties: dict = {}
        feat_idx = [j for j, n in enumerate(names) if n not in targets]
        X = values[:, feat_idx]
        try:
            for t in targets:
                j = names.index(t)
                obs = observed[:, j]
                if int(obs.sum()) < 5:
                    raise InsufficientData(f"target {t!r} has fewer than 5 observed rows")
                model = fit_ngb(X[obs], values[obs, j], BoostParams(stages=cfg.stages))
                self.models[t] = model
                missing = np.flatnonzero(~obs)
                if missing.size:
                    mu, sigma = predict_ngb_batch(model, X[missing])
                    values[missing, j] = mu
                    observed[missing, j] = True
                    provenance[missing, j] = PREDICTED
                    unc = {}
                    for i, m, s in zip(missing, mu, sigma):
                        if m != 0.0:
                            unc[imp.row_ids[i]] = float(100.0 * s / abs(m))
                    self.uncertainties[t] = unc
        except StageFailure:
            raise
        except Exception as e:
            raise StageFailure("fit_models", e) from e

        self.table = DataTable(
            names=names, row_ids=imp.row_ids, values=values, observed=observed
        ).with_kinds(targets)
        self.provenance = provenance
        self.targets = targets
        self.feature_names = [names[j] for j in feat_idx]
        self._feature_matrix = X

        self.key_attrs = list(targets) if targets else list(names[: min(3, len(names))])
        self._refresh_derived()

        self.tree = HistoryTree(self.table.row_ids)
        self.current_node = 0

    def _refresh_derived(self) -> None:
        """(Re)compute factors, embedding, and clustering for key_attrs."""
        cfg = self.config
        try:
            sources = {
                a: (SOURCE_PREDICTED if a in self.models else OTHER) for a in self.key_attrs
            }
            local_phi = {}
            for t in self.key_attrs:
                if t not in self.models:
                    continue
                local_phi[t] = self._local_attributions(t)
            self.factors = influencing_factors(
                self.key_attrs, sources, InfluenceContext(self.table, local_phi)
            )
        except StageFailure:
            raise
        except Exception as e:
            raise StageFailure("influence", e) from e

        try:
            emb_cols = list(self.key_attrs)
            for attr in self.key_attrs:
                for inf in self.factors[attr]:
                    if inf.factor not in emb_cols:
                        emb_cols.append(inf.factor)
            base = normalize_minmax(self.table.select_columns(emb_cols))
            emb = tsne_embed(
                base.values,
                TsneParams(perplexity=cfg.perplexity, iters=cfg.tsne_iters, seed=cfg.seed),
            )
            self.embedding_points = emb.points
            self.embedding = {rid: tuple(p) for rid, p in zip(self.table.row_ids, emb.points)}
        except StageFailure:
            raise
        except Exception as e:
            raise StageFailure("embed", e) from e

        try:
            self.labels = self._cluster(self.embedding_points)
        except StageFailure:
            raise
        except Exception as e:
            raise StageFailure("cluster", e) from e
        self._discovery_cache.clear()

    def _local_attributions(self, target: str):
        """Per-compound exact Shapley values for one fitted target."""
        model = self.models[target]
        feats = list(self.feature_names)
        cols = list(range(len(feats)))
        if len(feats) > MAX_SHAP_FEATURES:
            # exact enumeration caps out; keep the most correlated features
            cm = pairwise_pearson(self.table)
            scored = []
            for k, f in enumerate(feats):
                r = cm.get(target, f)
                scored.append((-(abs(r) if np.isfinite(r) else -1.0), f, k))
            scored.sort()
            keep = sorted(k for _, _, k in scored[:MAX_SHAP_FEATURES])
            feats = [feats[k] for k in keep]
            cols = keep
        Xf = self._feature_matrix
        background = Xf.mean(axis=0)

        def value_fn(z: np.ndarray) -> float:
            full = background.copy()
            full[cols] = z
            mu, _ = predict_ngb_batch(model, full[None, :])
            return float(mu[0])

        phi = np.empty((Xf.shape[0], len(feats)))
        bg_sub = background[cols]
        for i in range(Xf.shape[0]):
            attrs = shapley_exact(value_fn, Xf[i, cols], bg_sub, feats)
            by_name = {a.feature: a.phi for a in attrs}
            phi[i] = [by_name[f] for f in feats]
        return feats, phi

    def _cluster(self, points: np.ndarray) -> ClusterLabels:
        cfg = self.config
        n = points.shape[0]
        if n <= cfg.min_pts + 1:
            return ClusterLabels(labels=np.zeros(n, dtype=int), n_clusters=1, sizes=(n,))
        eps = cfg.eps if cfg.eps is not None else knee_eps(points, k=min(4, n - 1))
        labels = dbscan(points, eps=eps, min_pts=cfg.min_pts)
        if labels.n_clusters == 0:
            # all noise: treat the whole set as one cluster so hulls exist
            return ClusterLabels(labels=np.zeros(n, dtype=int), n_clusters=1, sizes=(n,))
        return labels

    # ----------------------------------------------------------- filters

    def retained(self) -> tuple:
        return self.tree.node(self.current_node).retained

    def apply(self, spec: FilterSpec) -> dict:
        parent = self.tree.node(self.current_node)
        kept = apply_filter(self.table, parent.retained, spec, embedding=self.embedding)
        top = None
        if isinstance(spec, (ClusterFilter, ReferenceFilter)):
            top = self._selected_vs_rest(parent.retained, kept)
        node = self.tree.add_child(parent.node_id, spec, kept, top)
        self.current_node = node.node_id
        return {
            "node": history_to_json(self.tree)["nodes"][node.node_id],
            "currentNode": node.node_id,
            "retainedCount": node.retained_count,
        }

    def _selected_vs_rest(self, pool, selected):
        chosen = set(selected)
        pool_idx = [self.table.row_index(r) for r in pool]
        labels = [1 if r in chosen else 0 for r in pool]
        if sum(labels) < 2 or len(labels) - sum(labels) < 2:
            return None
        sub = self.table.subset(row_idx=pool_idx)
        try:
            return anova_top_attribute(sub, labels)
        except InsufficientData:
            return None

    def set_key_attributes(self, attrs) -> None:
        attrs = list(attrs)
        if not 1 <= len(attrs) <= MAX_KEY_ATTRS:
            raise UsageError(f"need between 1 and {MAX_KEY_ATTRS} key attributes")
        if len(set(attrs)) != len(attrs):
            raise UsageError("key attributes must be distinct")
        for a in attrs:
            self.table.col_index(a)
        self.key_attrs = attrs
        self._refresh_derived()

    # ---------------------------------------------------------- payloads

    def history_payload(self) -> dict:
        doc = history_to_json(self.tree)
        doc["currentNode"] = self.current_node
        return doc

    def _axis_order(self):
        return sorted(self.table.names, key=lambda n: (self.table.groups[self.table.col_index(n)], n))

    def distribution_payload(self) -> dict:
        ids = self.retained()
        idx = [self.table.row_index(r) for r in ids]
        sub = self.table.subset(row_idx=idx)
        axes = []
        for attr in self._axis_order():
            try:
                s = axis_stats(sub, attr, bins=self.config.bins)
            except EmptyColumn:
                continue
            axes.append(
                {
                    "attr": s.attr,
                    "group": s.group,
                    "quantiles": s.quantiles,
                    "binEdges": list(s.bin_edges),
                    "binCounts": list(s.bin_counts),
                }
            )
        pairs = [(axes[i]["attr"], axes[i + 1]["attr"]) for i in range(len(axes) - 1)]
        unc = {
            attr: {rid: u for rid, u in per.items() if rid in set(ids)}
            for attr, per in self.uncertainties.items()
        }
        return {
            "retainedCount": len(ids),
            "axes": axes,
            "uncertainty": uncertainty_pairs(pairs, unc, list(ids)),
        }

    def _norm_bounds(self):
        bounds = {}
        for attr in self.key_attrs:
            vals, obs = self.table.column(attr)
            col = vals[obs]
            bounds[attr] = (float(col.min()), float(col.max()))
        return bounds

    def discovery_payload(self) -> dict:
        key = (self.current_node, tuple(self.key_attrs))
        if key in self._discovery_cache:
            return self._discovery_cache[key]
        if not self._job_lock.acquire(blocking=False):
            raise BusyError("a layout job is already running for this session")
        try:
            payload = self._compute_discovery()
            self._discovery_cache[key] = payload
            return payload
        finally:
            self._job_lock.release()

    def _compute_discovery(self) -> dict:
        cfg = self.config
        ids = list(self.retained())
        if not ids:
            raise EmptyInput("no retained compounds to lay out")
        idx = np.array([self.table.row_index(r) for r in ids])
        pts = self.embedding_points[idx]
        labels = self._cluster(pts)

        sample = density_sample(
            pts, labels, target=cfg.sample_target, seed=cfg.seed
        )
        kept_local = sample.kept_indices()
        kept_ids = [ids[i] for i in kept_local]
        omitted = [r for r in ids if r not in set(kept_ids)]

        sub_labels = labels.labels[kept_local]
        sizes = tuple(int(np.sum(sub_labels == c)) for c in range(labels.n_clusters))
        kept_cl = ClusterLabels(labels=sub_labels, n_clusters=labels.n_clusters, sizes=sizes)
        weights = {c: float(labels.sizes[c]) for c in range(labels.n_clusters)}
        scene = assemble_scene(
            pts[kept_local],
            kept_cl,
            weights=weights,
            params=SceneParams(
                buffer_radius=cfg.buffer_radius, glyph_radius=cfg.glyph_radius
            ),
        )

        bounds = self._norm_bounds()
        glyphs = []
        for i, rid in enumerate(kept_ids):
            row = self.table.row_index(rid)
            sectors = []
            for attr in self.key_attrs:
                lo, hi = bounds[attr]
                v = self.table.values[row, self.table.col_index(attr)]
                norm = 0.5 if hi <= lo else (float(v) - lo) / (hi - lo)
                bars = [
                    {
                        "factor": inf.factor,
                        "height": min(1.0, max(0.0, inf.strength)),
                        "direction": inf.direction,
                        "order": b,
                    }
                    for b, inf in enumerate(self.factors[attr])
                ]
                sectors.append({"attr": attr, "value": norm, "bars": bars})
            glyphs.append(
                {
                    "id": rid,
                    "position": [float(scene.positions[i, 0]), float(scene.positions[i, 1])],
                    "cluster": int(sub_labels[i]),
                    "sectors": sectors,
                }
            )
        return {
            "glyphs": glyphs,
            "polygons": [_poly_to_json(p) for p in scene.polygons_post],
            "glyphRadius": cfg.glyph_radius,
            "omitted": omitted,
            "clusters": labels.n_clusters,
            "converged": scene.converged,
        }

    def comparison_payload(self, ids) -> dict:
        ids = list(ids)
        if not ids:
            raise UsageError("need at least one compound id")
        pool = set(self.retained())
        for rid in ids:
            self.table.row_index(rid)
            if rid not in pool:
                raise KeyError(rid)
        ordered = sorted(ids, key=lambda r: (formula_key(r), r))
        columns = self._axis_order()

        # color scale per column over the selected rows
        scales = {}
        for attr in columns:
            vals = []
            for rid in ordered:
                i, j = self.table.row_index(rid), self.table.col_index(attr)
                if self.table.observed[i, j]:
                    vals.append(float(self.table.values[i, j]))
            scales[attr] = (min(vals), max(vals)) if vals else None

        # uncertainty scale over the circles present in this payload
        circle_unc = []
        for rid in ordered:
            i = self.table.row_index(rid)
            for attr in columns:
                j = self.table.col_index(attr)
                if self.provenance[i, j] == PREDICTED:
                    u = self.uncertainties.get(attr, {}).get(rid)
                    if u is not None:
                        circle_unc.append(u)
        u_lo = min(circle_unc) if circle_unc else 0.0
        u_hi = max(circle_unc) if circle_unc else 0.0

        rows = []
        for rid in ordered:
            i = self.table.row_index(rid)
            cells = []
            for attr in columns:
                j = self.table.col_index(attr)
                if not self.table.observed[i, j]:
                    cells.append({"attr": attr, "value": None, "shape": None})
                    continue
                v = float(self.table.values[i, j])
                lo, hi = scales[attr]
                color = 0.5 if hi <= lo else (v - lo) / (hi - lo)
                prov = int(self.provenance[i, j])
                cell = {
                    "attr": attr,
                    "value": v,
                    "colorScalar": color,
                    "shape": CELL_SHAPES[prov],
                    "provenance": PROVENANCE_NAMES[prov],
                }
                if prov == PREDICTED:
                    u = self.uncertainties.get(attr, {}).get(rid)
                    if u is None:
                        norm = 1.0  # unknown spread reads as least trustworthy
                    elif u_hi <= u_lo:
                        norm = 0.5
                    else:
                        norm = (u - u_lo) / (u_hi - u_lo)
                    cell["radiusScalar"] = max(0.1, min(1.0, 1.0 - norm))
                cells.append(cell)
            rows.append({"id": rid, "cells": cells})
        return {
            "rows": rows,
            "columns": [
                {"attr": a, "group": self.table.groups[self.table.col_index(a)]}
                for a in columns
            ],
        }


def parse_filter(doc: dict) -> FilterSpec:
    """FilterSpec from a request body; malformed input raises UsageError."""
    if not isinstance(doc, dict):
        raise UsageError("filter body must be an object")
    kind = doc.get("kind")
    try:
        if kind == "range":
            return RangeFilter(str(doc["attr"]), float(doc["lo"]), float(doc["hi"]))
        if kind == "cluster":
            ids = doc["ids"]
            if not isinstance(ids, (list, tuple)):
                raise UsageError("cluster ids must be a list")
            return ClusterFilter(tuple(str(i) for i in ids))
        if kind == "reference":
            return ReferenceFilter(str(doc["refId"]), int(doc["topN"]))
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"malformed {kind!r} filter: {e}") from e
    raise UsageError(f"unknown filter kind {kind!r}")
