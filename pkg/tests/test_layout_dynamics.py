"""Cartogram deformation and force-directed glyph cleanup."""

import numpy as np
import pytest
from shapely.geometry import Point
from shapely.geometry import Polygon as ShapelyPolygon

from sparsescope.errors import AssignmentError, GeometryError, UsageError
from sparsescope.layout.cartogram import CartogramParams, densify, diffusion_cartogram
from sparsescope.layout.forces import (
    ForceParams,
    LayoutScene,
    force_refine,
    nearest_neighbor_edges,
)
from sparsescope.layout.geometry import Polygon


def rect(x0, y0, x1, y1, kind="cluster", cluster=0, weight=1.0):
    verts = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)
    return Polygon(vertices=verts, kind=kind, cluster=cluster, weight=weight)


# ---------------------------------------------------------------- densify


def test_densify_caps_edge_length_and_keeps_shape():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    dense = densify(square, max_len=0.3)
    assert dense.shape[0] > 4
    # every consecutive pair (cyclically) is within the cap
    gaps = np.linalg.norm(np.roll(dense, -1, axis=0) - dense, axis=1)
    assert gaps.max() <= 0.3 + 1e-12
    # original corners survive and the area is untouched
    for corner in square:
        assert np.min(np.linalg.norm(dense - corner, axis=1)) < 1e-12
    x, y = dense[:, 0], dense[:, 1]
    area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    assert area == pytest.approx(1.0, abs=1e-12)


# -------------------------------------------------------------- cartogram


def halves(w_left, w_right):
    left = rect(0, 0, 0.5, 1, cluster=0, weight=w_left)
    right = rect(0.5, 0, 1, 1, cluster=1, weight=w_right)
    return [left, right]


def test_balanced_weights_leave_vertices_alone():
    res = diffusion_cartogram(halves(1.0, 1.0))
    assert res.converged
    assert res.steps == 0
    for before, after in zip(halves(1.0, 1.0), res.polygons):
        assert np.allclose(before.vertices, after.vertices, atol=1e-6)
    assert res.points is None


def test_two_to_one_weights_reach_two_to_one_areas():
    res = diffusion_cartogram(halves(2.0, 1.0))
    assert res.converged
    assert res.steps > 0
    ratio = res.polygons[0].area / res.polygons[1].area
    assert 2.0 * 0.95 <= ratio <= 2.0 * 1.05


def test_total_area_conserved():
    res = diffusion_cartogram(halves(2.0, 1.0))
    total = sum(p.area for p in res.polygons)
    assert abs(total - 1.0) <= 0.01


def test_deformed_polygons_stay_simple():
    res = diffusion_cartogram(halves(2.0, 1.0))
    for p in res.polygons:
        assert ShapelyPolygon(p.vertices).is_valid


def test_light_dummy_shrinks_heavy_cluster_grows():
    left = rect(0, 0, 0.5, 1, kind="dummy", cluster=None, weight=0.1)
    right = rect(0.5, 0, 1, 1, kind="cluster", cluster=0, weight=10.0)
    res = diffusion_cartogram([left, right])
    dummy_after, cluster_after = (p.area for p in res.polygons)
    assert cluster_after > 0.5 + 0.05
    assert dummy_after < 0.5 - 0.05


def test_passenger_points_follow_the_flow():
    pts = np.array([[0.45, 0.5], [0.05, 0.05]])
    res = diffusion_cartogram(halves(2.0, 1.0), points=pts)
    assert res.points.shape == (2, 2)
    # the heavy left half inflates, so a point near the seam drifts right
    assert res.points[0, 0] > 0.45 + 0.01
    assert np.all(res.points >= -1e-9)
    assert np.all(res.points <= 1 + 1e-9)
    # inputs are not mutated
    assert pts[0, 0] == 0.45


def test_gap_in_tiling_rejected():
    # the two rects cover 0.8 of their joint bbox
    polys = [rect(0, 0, 1, 0.4, weight=1.0), rect(0, 0.6, 1, 1, cluster=1, weight=1.0)]
    with pytest.raises(GeometryError):
        diffusion_cartogram(polys)


def test_overlap_in_tiling_rejected():
    polys = [rect(0, 0, 1, 1, weight=1.0), rect(0, 0, 1, 1, cluster=1, weight=2.0)]
    with pytest.raises(GeometryError):
        diffusion_cartogram(polys)


def test_bad_weights_rejected():
    with pytest.raises(UsageError):
        diffusion_cartogram(halves(0.0, 1.0))
    with pytest.raises(UsageError):
        diffusion_cartogram([])


def test_step_cap_reports_non_convergence():
    res = diffusion_cartogram(halves(2.0, 1.0), CartogramParams(max_steps=3))
    assert not res.converged
    assert res.steps <= 3
    assert res.max_rel_error > CartogramParams().area_tol


def test_cartogram_deterministic():
    a = diffusion_cartogram(halves(2.0, 1.0), points=np.array([[0.3, 0.3]]))
    b = diffusion_cartogram(halves(2.0, 1.0), points=np.array([[0.3, 0.3]]))
    for pa, pb in zip(a.polygons, b.polygons):
        assert np.array_equal(pa.vertices, pb.vertices)
    assert np.array_equal(a.points, b.points)
    assert a.steps == b.steps


# ----------------------------------------------------------------- forces


def unit_square(kind="cluster", cluster=0, weight=1.0):
    return rect(0, 0, 1, 1, kind=kind, cluster=cluster, weight=weight)


def scene_of(points, polygons, assignment, edges=()):
    return LayoutScene(
        initial=np.asarray(points, dtype=float),
        polygons=polygons,
        assignment=np.asarray(assignment),
        edges=tuple(edges),
    )


def test_lone_interior_point_stays_put():
    scene = scene_of([[0.5, 0.5]], [unit_square()], [0])
    res = force_refine(scene, ForceParams(collision_radius=0.01))
    assert np.allclose(res.positions, [[0.5, 0.5]], atol=1e-9)
    assert res.iterations >= 1
    assert res.mean_displacement == pytest.approx(0.0, abs=1e-9)


def test_outside_point_pulled_inside():
    scene = scene_of([[1.5, 0.5]], [unit_square()], [0])
    r = 0.02
    res = force_refine(scene, ForceParams(collision_radius=r))
    eps = r / 10
    assert ShapelyPolygon(unit_square().vertices).buffer(eps).contains(
        Point(res.positions[0])
    )
    assert res.mean_displacement == pytest.approx(
        float(np.linalg.norm(res.positions[0] - [1.5, 0.5]))
    )
    assert res.mean_displacement > 0.4


def test_coincident_pair_breaks_symmetry():
    r = 0.01
    scene = scene_of([[0.5, 0.5], [0.5, 0.5]], [unit_square()], [0, 0])
    res = force_refine(scene, ForceParams(collision_radius=r))
    gap = float(np.linalg.norm(res.positions[0] - res.positions[1]))
    assert gap >= 2 * r - r / 10
    fat = ShapelyPolygon(unit_square().vertices).buffer(r / 10)
    assert all(fat.contains(Point(p)) for p in res.positions)


def test_crowded_scene_meets_hard_guarantees():
    rng = np.random.default_rng(5)
    polys = [unit_square(), rect(1, 0, 2, 1, cluster=1)]
    n = 60
    assignment = np.repeat([0, 1], n // 2)
    pts = np.empty((n, 2))
    pts[: n // 2] = rng.uniform(0.05, 0.95, size=(n // 2, 2))
    pts[n // 2 :] = rng.uniform([1.05, 0.05], [1.95, 0.95], size=(n // 2, 2))
    # shove a few points out of their regions on purpose
    pts[0] = [-0.3, 0.5]
    pts[n // 2] = [0.4, 0.5]
    r = 0.015
    edges = nearest_neighbor_edges(pts, assignment)
    res = force_refine(scene_of(pts, polys, assignment, edges), ForceParams(collision_radius=r))

    eps = r / 10
    d = np.sqrt(np.sum((res.positions[:, None] - res.positions[None, :]) ** 2, axis=-1))
    iu = np.triu_indices(n, 1)
    assert d[iu].min() >= 2 * r - eps

    fats = [ShapelyPolygon(p.vertices).buffer(1e-9) for p in polys]
    inside = sum(
        fats[assignment[i]].contains(Point(res.positions[i])) for i in range(n)
    )
    assert inside >= int(np.ceil(0.99 * n))
    assert np.isfinite(res.mean_displacement)


def test_force_refine_deterministic():
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.1, 0.9, size=(20, 2))
    scene = scene_of(pts, [unit_square()], np.zeros(20, dtype=int))
    p = ForceParams(collision_radius=0.03)
    a = force_refine(scene, p)
    b = force_refine(scene, p)
    assert np.array_equal(a.positions, b.positions)
    assert a.iterations == b.iterations


def test_assignment_validation():
    square = unit_square()
    with pytest.raises(AssignmentError):
        force_refine(scene_of([[0.5, 0.5]], [square], [0, 1]), ForceParams(0.01))
    with pytest.raises(AssignmentError):
        force_refine(scene_of([[0.5, 0.5]], [square], [3]), ForceParams(0.01))
    with pytest.raises(AssignmentError):
        force_refine(scene_of([[0.5, 0.5]], [square], [-1]), ForceParams(0.01))


def test_param_validation():
    with pytest.raises(UsageError):
        ForceParams(collision_radius=0.0).validate()
    with pytest.raises(UsageError):
        ForceParams(collision_radius=0.1, tol=0.0).validate()
    with pytest.raises(UsageError):
        ForceParams(collision_radius=0.1, k_boundary=-1.0).validate()


def test_nearest_neighbor_edges_by_hand():
    pts = [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]
    assert nearest_neighbor_edges(pts, [0, 0, 0]) == ((0, 1), (1, 2))
    # separate labels never link across
    pts = [[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0]]
    assert nearest_neighbor_edges(pts, [0, 0, 1, 1]) == ((0, 1), (2, 3))
    # a singleton cluster contributes nothing
    assert nearest_neighbor_edges([[0.0, 0.0]], [0]) == ()
