"""Cluster hull polygons and the dummy-region partition of the canvas.

Hulls come from scipy's ConvexHull (Qhull, i.e. the Quickhull algorithm);
degenerate clusters fall back to a 32-gon disc around their centroid.
Dummy regions tile the empty space: the bounding box is cut into a 4x4
grid and cells overlapping a hull are split along their longer axis
until small enough, then clipped against the hull union.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry import box
from shapely.geometry.polygon import orient
from shapely.ops import unary_union
from shapely.prepared import prep

from ..cluster import ClusterLabels
from ..errors import GeometryError, UsageError

DUMMY_WEIGHT = 0.1
BUFFER_SEGMENTS = 32
GRID = 4
AREA_BOUND = 0.1
MIN_DUMMY_AREA = 1e-4


@dataclass(frozen=True)
class Polygon:
    vertices: np.ndarray  # (k, 2), counterclockwise, not closed
    kind: str  # "cluster" | "dummy"
    cluster: int | None
    weight: float

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def as_shapely(self) -> ShapelyPolygon:
        return ShapelyPolygon(self.vertices)

    def with_vertices(self, vertices: np.ndarray) -> "Polygon":
        return replace(self, vertices=np.asarray(vertices, dtype=float))


def _from_shapely(geom: ShapelyPolygon, kind: str, cluster, weight: float) -> Polygon:
    ring = orient(geom, sign=1.0).exterior.coords
    return Polygon(
        vertices=np.asarray(ring[:-1], dtype=float), kind=kind, cluster=cluster, weight=weight
    )


def _disc(center: np.ndarray, radius: float) -> np.ndarray:
    angles = np.linspace(0.0, 2.0 * np.pi, BUFFER_SEGMENTS, endpoint=False)
    return center + radius * np.column_stack([np.cos(angles), np.sin(angles)])


def convex_hulls(
    points,
    labels: ClusterLabels,
    buffer_radius: float,
    weights: dict | None = None,
) -> list[Polygon]:
    """One polygon per cluster; weight defaults to the member count."""
    points = np.asarray(points, dtype=float)
    if labels.n_clusters < 1:
        raise UsageError("need at least one cluster")
    if buffer_radius <= 0:
        raise UsageError("buffer_radius must be > 0")
    out = []
    for c in range(labels.n_clusters):
        idx = np.flatnonzero(labels.labels == c)
        pts = points[idx]
        weight = float(weights[c]) if weights else float(idx.size)
        verts = None
        if pts.shape[0] >= 3:
            try:
                hull = ConvexHull(pts)
                verts = pts[hull.vertices]  # scipy emits CCW order in 2D
            except QhullError:
                verts = None  # collinear: fall through to the disc rule
        if verts is None:
            verts = _disc(pts.mean(axis=0), buffer_radius)
        out.append(Polygon(vertices=verts, kind="cluster", cluster=c, weight=weight))
    return out


def _split(minx, miny, maxx, maxy):
    if maxx - minx >= maxy - miny:
        midx = (minx + maxx) / 2
        return ((minx, miny, midx, maxy), (midx, miny, maxx, maxy))
    midy = (miny + maxy) / 2
    return ((minx, miny, maxx, midy), (minx, midy, maxx, maxy))


def dummy_partition(
    bbox: tuple,
    cluster_hulls: list[Polygon],
    area_bound: float = AREA_BOUND,
    min_area: float = MIN_DUMMY_AREA,
) -> list[Polygon]:
    """Dummy polygons covering bbox minus the hulls.

    bbox is (minx, miny, maxx, maxy), normally the unit square.  Emitted
    pieces never contain holes: a cell whose clipped remainder would ring
    a hull is split further instead.
    """
    minx, miny, maxx, maxy = map(float, bbox)
    if not (maxx > minx and maxy > miny):
        raise UsageError("empty bbox")
    canvas = box(minx, miny, maxx, maxy)
    shapes = [h.as_shapely() for h in cluster_hulls]
    for h in shapes:
        if not canvas.buffer(1e-9).covers(h):
            raise GeometryError("cluster hull extends outside the bbox")
    blocked = unary_union(shapes) if shapes else None

    out: list[Polygon] = []

    def emit_clipped(cell):
        remainder = cell.difference(blocked)
        if remainder.is_empty:
            return True
        parts = getattr(remainder, "geoms", [remainder])
        if any(p.interiors for p in parts):
            return False  # would create a hole; caller must split further
        for p in parts:
            if p.area >= min_area:
                out.append(_from_shapely(p, "dummy", None, DUMMY_WEIGHT))
        return True

    def walk(bounds):
        cell = box(*bounds)
        if blocked is None or not cell.intersects(blocked) or cell.intersection(blocked).area == 0:
            out.append(_from_shapely(cell, "dummy", None, DUMMY_WEIGHT))
            return
        if cell.area < area_bound and emit_clipped(cell):
            return
        for half in _split(*bounds):
            walk(half)

    xs = np.linspace(minx, maxx, GRID + 1)
    ys = np.linspace(miny, maxy, GRID + 1)
    for i in range(GRID):
        for j in range(GRID):
            walk((xs[i], ys[j], xs[i + 1], ys[j + 1]))
    return out


def coverage_gap(bbox: tuple, polygons: list[Polygon]) -> float:
    """|area(bbox) - area(union of polygons)| for tiling checks."""
    union = unary_union([p.as_shapely() for p in polygons])
    return abs(box(*bbox).area - union.area)


def pairwise_overlap(polygons: list[Polygon]) -> float:
    """Largest interior intersection area between any two polygons."""
    raw = [p.as_shapely() for p in polygons]
    shapes = [prep(p) for p in raw]
    worst = 0.0
    for i in range(len(raw)):
        for j in range(i + 1, len(raw)):
            if shapes[i].intersects(raw[j]):
                worst = max(worst, raw[i].intersection(raw[j]).area)
    return worst
