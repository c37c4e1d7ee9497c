"""Force-directed cleanup of glyph positions inside their cluster polygons.

Five forces act on each glyph: a pull back to the polygon when outside
(k_b), a weak anchor to the pre-refinement position (k_o), springs along
nearest-neighbor edges, inverse-distance charge repulsion, and hard
collision separation at twice the glyph radius.  The default constants
(20, 0.2, 0.3, -30) assume a canvas of about a thousand units, so
positions are rescaled internally and mapped back at the end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path
from shapely.geometry import Point
from shapely.geometry import Polygon as ShapelyPolygon

from ..errors import AssignmentError, UsageError

CANVAS = 1000.0
VELOCITY_DECAY = 0.9
POLISH_ROUNDS = 60
_MIN_CHARGE_DIST = 1.0  # canvas units


@dataclass(frozen=True)
class ForceParams:
    collision_radius: float  # input units
    k_boundary: float = 20.0
    k_origin: float = 0.2
    link_strength: float = 0.3
    charge_strength: float = -30.0
    max_iters: int = 300
    tol: float = 1e-4  # input units, max per-step displacement

    def validate(self) -> None:
        if self.collision_radius <= 0:
            raise UsageError("collision_radius must be > 0")
        if min(self.k_boundary, self.k_origin, self.link_strength) < 0:
            raise UsageError("force strengths must be >= 0")
        if self.max_iters < 1 or self.tol <= 0:
            raise UsageError("max_iters must be >= 1 and tol > 0")


@dataclass(frozen=True)
class LayoutScene:
    initial: np.ndarray  # (n, 2) input coordinates
    polygons: list  # Polygon records, post-cartogram
    assignment: np.ndarray  # (n,) index into polygons
    edges: tuple  # ((u, v), ...) within-cluster nearest-neighbor links


@dataclass(frozen=True)
class ForceResult:
    positions: np.ndarray  # input coordinates
    iterations: int
    mean_displacement: float


def nearest_neighbor_edges(points, labels) -> tuple:
    """Undirected edge set: every point linked to its nearest same-label point."""
    points = np.asarray(points, dtype=float)
    labels = np.asarray(labels)
    edges = set()
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        if idx.size < 2:
            continue
        sub = points[idx]
        d = np.sqrt(np.sum((sub[:, None] - sub[None, :]) ** 2, axis=-1))
        np.fill_diagonal(d, np.inf)
        for a, row in enumerate(d):
            b = int(np.argmin(row))
            edges.add((int(min(idx[a], idx[b])), int(max(idx[a], idx[b]))))
    return tuple(sorted(edges))


def _pair_direction(delta: np.ndarray, i: int, j: int) -> np.ndarray:
    dist = float(np.linalg.norm(delta))
    if dist > 1e-12:
        return delta / dist
    angle = 0.618 * (i * 131 + j)  # deterministic for coincident pairs
    return np.array([np.cos(angle), np.sin(angle)])


def _violating_pairs(pos: np.ndarray, target: float):
    n = pos.shape[0]
    if n < 2:
        return []
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    iu, ju = np.triu_indices(n, 1)
    mask = dist[iu, ju] < target
    return list(zip(iu[mask].tolist(), ju[mask].tolist()))


def _separate(pos: np.ndarray, r: float, passes: int) -> None:
    target = 2.0 * r
    for _ in range(passes):
        pairs = _violating_pairs(pos, target - 1e-12)
        if not pairs:
            break
        for i, j in pairs:  # sequential resolution over the shortlist
            delta = pos[j] - pos[i]
            dist = float(np.linalg.norm(delta))
            if dist >= target:
                continue
            direction = _pair_direction(delta, i, j)
            push = 0.5 * (target - dist)
            pos[i] -= direction * push
            pos[j] += direction * push


def force_refine(scene: LayoutScene, params: ForceParams) -> ForceResult:
    """Iterate the five-force system, then polish for hard guarantees.

    After the velocity loop, alternating project-inside and separate
    passes run until no pair sits closer than 2r; projection happens
    first so the final separation pass is never undone.
    """
    params.validate()
    init_in = np.asarray(scene.initial, dtype=float)
    n = init_in.shape[0]
    assignment = np.asarray(scene.assignment)
    if assignment.shape != (n,):
        raise AssignmentError("assignment length does not match points")
    if n and (assignment.min() < 0 or assignment.max() >= len(scene.polygons)):
        raise AssignmentError("assignment index out of range")

    verts = np.vstack([p.vertices for p in scene.polygons])
    mins = verts.min(axis=0)
    span = float(max(verts.max(axis=0) - mins))
    if span <= 0:
        raise UsageError("degenerate polygon extent")
    scale = CANVAS / span

    pos = (init_in - mins) * scale
    init = pos.copy()
    r = params.collision_radius * scale
    tol = params.tol * scale
    paths = [Path(p.vertices) for p in scene.polygons]
    shapes = [ShapelyPolygon(p.vertices) for p in scene.polygons]
    rings = [s.exterior for s in shapes]
    reps = [np.asarray(s.representative_point().coords[0]) for s in shapes]

    def to_input(p):
        return p / scale + mins

    def nearest_on_boundary(k, xy):
        ring = rings[k]
        q = ring.interpolate(ring.project(Point(xy * (1 / scale) + mins)))
        return (np.asarray(q.coords[0]) - mins) * scale

    vel = np.zeros_like(pos)
    iterations = 0
    for it in range(params.max_iters):
        force = params.k_origin * (init - pos)
        # boundary pull, only for points outside their polygon
        for k in range(len(scene.polygons)):
            members = np.flatnonzero(assignment == k)
            if not members.size:
                continue
            inside = paths[k].contains_points(pos[members] / scale + mins)
            for m in members[~inside]:
                b = nearest_on_boundary(k, pos[m])
                d = b - pos[m]
                norm = float(np.linalg.norm(d))
                if norm > 1e-12:
                    force[m] += params.k_boundary * d / norm
        for u, v in scene.edges:
            delta = pos[v] - pos[u]
            dist = float(np.linalg.norm(delta))
            rest = max(float(np.linalg.norm(init[v] - init[u])), 2 * r)
            if dist > 1e-12:
                f = params.link_strength * (dist - rest) * delta / dist
                force[u] += f
                force[v] -= f
        if n > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt(np.sum(diff**2, axis=-1))
            np.fill_diagonal(dist, np.inf)
            dist = np.maximum(dist, _MIN_CHARGE_DIST)
            # negative charge repels, as in the usual many-body convention
            mag = -params.charge_strength / dist**2
            force += np.sum(mag[:, :, None] * diff, axis=1)

        vel = (vel + force) * VELOCITY_DECAY
        step = vel.copy()
        pos = pos + step
        _separate(pos, r, passes=2)
        iterations = it + 1
        if n == 0 or float(np.abs(step).max()) < tol:
            break

    eps = r / 10.0
    rep_canvas = [(rp - mins) * scale for rp in reps]
    fat_shapes = [s.buffer(1e-9) for s in shapes]

    def project_inside(k, xy):
        # nearest boundary point, nudged a full radius toward the
        # interior so the next separation pass cannot eject it again;
        # falls back toward the representative point until containment
        b = nearest_on_boundary(k, xy)
        toward = rep_canvas[k] - b
        norm = float(np.linalg.norm(toward))
        if norm <= 1e-12:
            return rep_canvas[k]
        cand = b + toward / norm * min(r, norm)
        t = 1.0
        while not fat_shapes[k].contains(Point(to_input(cand))) and t > 1e-6:
            t *= 0.5
            cand = b + toward * t
        return cand

    for _ in range(POLISH_ROUNDS):
        moved = False
        for k in range(len(scene.polygons)):
            members = np.flatnonzero(assignment == k)
            if not members.size:
                continue
            inside = paths[k].contains_points(pos[members] / scale + mins)
            for m in members[~inside]:
                pos[m] = project_inside(k, pos[m])
                moved = True
        before = pos.copy()
        _separate(pos, r, passes=4)
        if not moved and np.array_equal(before, pos):
            break

    final = to_input(pos)
    mean_disp = float(np.mean(np.linalg.norm(final - init_in, axis=1))) if n else 0.0
    return ForceResult(positions=final, iterations=iterations, mean_displacement=mean_disp)
