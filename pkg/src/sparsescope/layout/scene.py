"""End-to-end assembly of a glyph scene from embedded, clustered points.

Order of operations: normalize the embedding to the unit square, hull
each cluster, make the hulls mutually disjoint (earlier cluster wins),
tile the leftover space with dummy polygons, deform the tiling with the
diffusion cartogram (points ride along), then run the force pass for the
hard containment and separation guarantees.  The polygon list always
holds the cluster hulls first, in label order, so polygons[label] is the
home region of that cluster's points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from xml.etree import ElementTree as ET

import numpy as np
from shapely.geometry import Point
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry import box
from shapely.ops import unary_union

from ..cluster import ClusterLabels
from ..errors import GeometryError, UsageError
from .cartogram import CartogramParams, diffusion_cartogram
from .forces import ForceParams, LayoutScene, force_refine, nearest_neighbor_edges
from .geometry import Polygon, _from_shapely, convex_hulls, dummy_partition

UNIT_BBOX = (0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class SceneParams:
    buffer_radius: float = 0.04
    glyph_radius: float = 0.012
    cartogram: CartogramParams = field(default_factory=CartogramParams)
    force: ForceParams | None = None  # derived from glyph_radius when None

    def force_params(self) -> ForceParams:
        return self.force or ForceParams(collision_radius=self.glyph_radius)

    def as_record(self) -> dict:
        f = self.force_params()
        return {
            "bufferRadius": self.buffer_radius,
            "glyphRadius": self.glyph_radius,
            "cartogram": {
                "gridRes": self.cartogram.grid_res,
                "maxSteps": self.cartogram.max_steps,
                "areaTol": self.cartogram.area_tol,
            },
            "force": {
                "collisionRadius": f.collision_radius,
                "kBoundary": f.k_boundary,
                "kOrigin": f.k_origin,
                "linkStrength": f.link_strength,
                "chargeStrength": f.charge_strength,
                "maxIters": f.max_iters,
                "tol": f.tol,
            },
        }


@dataclass(frozen=True)
class Scene:
    points: np.ndarray  # normalized initial positions, (n, 2)
    labels: np.ndarray  # cluster per point, -1 = noise
    polygons_pre: list  # hulls then dummies, before deformation
    polygons_post: list  # same regions after the cartogram
    assignment: np.ndarray  # polygon index per point
    edges: tuple
    positions: np.ndarray  # final glyph centers
    glyph_radius: float
    steps: int
    converged: bool
    mean_displacement: float
    params: dict


def normalize_unit(points) -> np.ndarray:
    """Min-max scale each axis into [0, 1]; a flat axis collapses to 0.5."""
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = hi - lo
    out = np.empty_like(pts)
    for a in range(pts.shape[1]):
        out[:, a] = 0.5 if span[a] <= 0 else (pts[:, a] - lo[a]) / span[a]
    return out


def _largest_polygon(geom):
    if geom.is_empty:
        return None
    if isinstance(geom, ShapelyPolygon):
        return geom
    polys = [g for g in getattr(geom, "geoms", []) if isinstance(g, ShapelyPolygon)]
    return max(polys, key=lambda g: g.area) if polys else None


def disjoint_hulls(hulls: list) -> list:
    """Clip hulls to the unit square and to each other, earlier cluster wins."""
    unit = box(*UNIT_BBOX)
    taken = None
    out = []
    for h in hulls:
        g = h.as_shapely().intersection(unit)
        if taken is not None:
            g = g.difference(taken)
        g = _largest_polygon(g)
        if g is None or g.area <= 1e-6:
            raise GeometryError(f"hull of cluster {h.cluster} vanished after clipping")
        out.append(_from_shapely(g, "cluster", h.cluster, h.weight))
        taken = g if taken is None else unary_union([taken, g])
    return out


def assemble_scene(
    points,
    labels: ClusterLabels,
    weights: dict | None = None,
    params: SceneParams = SceneParams(),
) -> Scene:
    """Build the full packed-glyph scene for an embedded point set."""
    pts = normalize_unit(points)
    n = pts.shape[0]
    if labels.labels.shape[0] != n:
        raise UsageError("labels do not match points")

    hulls = disjoint_hulls(convex_hulls(pts, labels, params.buffer_radius, weights))
    dummies = dummy_partition(UNIT_BBOX, hulls)
    pre = hulls + dummies

    cart = diffusion_cartogram(pre, params.cartogram, points=pts)
    post = cart.polygons
    carried = cart.points

    assignment = np.asarray(labels.labels, dtype=int).copy()
    noise = np.flatnonzero(assignment < 0)
    if noise.size:
        # noise lives in the spacer regions; nearest dummy hosts it
        candidates = [k for k, p in enumerate(post) if p.kind == "dummy"]
        candidates = candidates or list(range(len(post)))
        shapes = [ShapelyPolygon(post[k].vertices) for k in candidates]
        for i in noise:
            at = Point(carried[i])
            assignment[i] = candidates[int(np.argmin([s.distance(at) for s in shapes]))]

    edges = tuple(
        (u, v) for u, v in nearest_neighbor_edges(pts, labels.labels) if labels.labels[u] >= 0
    )

    refined = force_refine(
        LayoutScene(initial=carried, polygons=post, assignment=assignment, edges=edges),
        params.force_params(),
    )
    return Scene(
        points=pts,
        labels=np.asarray(labels.labels, dtype=int),
        polygons_pre=pre,
        polygons_post=post,
        assignment=assignment,
        edges=edges,
        positions=refined.positions,
        glyph_radius=params.glyph_radius,
        steps=cart.steps,
        converged=cart.converged,
        mean_displacement=refined.mean_displacement,
        params=params.as_record(),
    )


# ----------------------------------------------------------- serialization


def _poly_to_json(p: Polygon) -> dict:
    return {
        "vertices": p.vertices.tolist(),
        "kind": p.kind,
        "cluster": p.cluster,
        "weight": p.weight,
    }


def _poly_from_json(d: dict) -> Polygon:
    return Polygon(
        vertices=np.asarray(d["vertices"], dtype=float),
        kind=d["kind"],
        cluster=d["cluster"],
        weight=float(d["weight"]),
    )


def scene_to_json(scene: Scene) -> dict:
    return {
        "points": scene.points.tolist(),
        "labels": scene.labels.tolist(),
        "polygonsPre": [_poly_to_json(p) for p in scene.polygons_pre],
        "polygonsPost": [_poly_to_json(p) for p in scene.polygons_post],
        "assignment": scene.assignment.tolist(),
        "edges": [list(e) for e in scene.edges],
        "finalPositions": scene.positions.tolist(),
        "glyphRadius": scene.glyph_radius,
        "steps": scene.steps,
        "converged": scene.converged,
        "meanDisplacement": scene.mean_displacement,
        "params": scene.params,
    }


def scene_from_json(d: dict) -> Scene:
    return Scene(
        points=np.asarray(d["points"], dtype=float),
        labels=np.asarray(d["labels"], dtype=int),
        polygons_pre=[_poly_from_json(p) for p in d["polygonsPre"]],
        polygons_post=[_poly_from_json(p) for p in d["polygonsPost"]],
        assignment=np.asarray(d["assignment"], dtype=int),
        edges=tuple((int(u), int(v)) for u, v in d["edges"]),
        positions=np.asarray(d["finalPositions"], dtype=float),
        glyph_radius=float(d["glyphRadius"]),
        steps=int(d["steps"]),
        converged=bool(d["converged"]),
        mean_displacement=float(d["meanDisplacement"]),
        params=dict(d["params"]),
    )


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_json(scene), fh, indent=2)
        fh.write("\n")


def load_scene(path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        return scene_from_json(json.load(fh))


# ------------------------------------------------------------------- SVG

SVG_SIZE = 640.0


def _hue(cluster: int) -> str:
    return f"hsl({(47 + 61 * cluster) % 360},55%,72%)"


def write_scene_svg(scene: Scene, path) -> None:
    """Plain SVG of the final scene; classes and data- attrs kept machine-checkable."""
    s = SVG_SIZE

    def at(p):
        return f"{p[0] * s:.2f}", f"{(1 - p[1]) * s:.2f}"

    root = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": f"{s:g}",
            "height": f"{s:g}",
            "viewBox": f"0 0 {s:g} {s:g}",
        },
    )
    for k, poly in enumerate(scene.polygons_post):
        pts = " ".join(",".join(at(v)) for v in poly.vertices)
        fill = "#eeeeee" if poly.kind == "dummy" else _hue(poly.cluster)
        ET.SubElement(
            root,
            "polygon",
            {
                "points": pts,
                "fill": fill,
                "stroke": "#999999",
                "stroke-width": "0.5",
                "class": poly.kind,
                "data-index": str(k),
            },
        )
    for u, v in scene.edges:
        (x1, y1), (x2, y2) = at(scene.positions[u]), at(scene.positions[v])
        ET.SubElement(
            root,
            "line",
            {"x1": x1, "y1": y1, "x2": x2, "y2": y2, "stroke": "#666666", "class": "link"},
        )
    for i, p in enumerate(scene.positions):
        cx, cy = at(p)
        ET.SubElement(
            root,
            "circle",
            {
                "cx": cx,
                "cy": cy,
                "r": f"{scene.glyph_radius * s:.2f}",
                "fill": "#ffffff",
                "stroke": "#333333",
                "class": "glyph",
                "data-cluster": str(int(scene.labels[i])),
            },
        )
    ET.ElementTree(root).write(path, encoding="unicode", xml_declaration=True)
