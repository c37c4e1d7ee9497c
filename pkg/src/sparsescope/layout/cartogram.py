"""Area-equalizing polygon deformation via density diffusion.

Each region gets a piecewise-constant density weight/area.  Diffusing
that density with zero-flux walls has a closed form in the cosine basis,
so rho(t) costs one inverse DCT per evaluation; region vertices (and any
passenger points) ride the displacement flow v = -grad(rho)/rho until
every cluster polygon's area share matches its weight share.  Overweight
regions are left sparser than their surroundings by the normalization,
so the flow inflates them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path
from scipy.fft import dctn, idctn
from scipy.ndimage import map_coordinates

from ..errors import GeometryError, UsageError
from .geometry import Polygon

T_START = 6e-5
T_FINAL = 3.0
T_GROWTH = 1.2
_RHO_FLOOR = 1e-9


@dataclass(frozen=True)
class CartogramParams:
    grid_res: int = 128
    max_steps: int = 500
    area_tol: float = 0.05


@dataclass(frozen=True)
class CartogramResult:
    polygons: list
    points: np.ndarray | None
    steps: int
    converged: bool
    max_rel_error: float


def densify(vertices: np.ndarray, max_len: float) -> np.ndarray:
    """Insert evenly spaced points so no edge exceeds max_len."""
    out = []
    k = vertices.shape[0]
    for i in range(k):
        a, b = vertices[i], vertices[(i + 1) % k]
        pieces = max(1, int(np.ceil(np.linalg.norm(b - a) / max_len)))
        for j in range(pieces):
            out.append(a + (b - a) * (j / pieces))
    return np.asarray(out)


def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


class _DiffusionField:
    """rho(t) and its flow on a fixed grid over the bbox."""

    def __init__(self, polygons, bbox, grid_res):
        self.minx, self.miny, self.maxx, self.maxy = bbox
        self.w = self.maxx - self.minx
        self.h = self.maxy - self.miny
        self.n = grid_res
        self.dx = self.w / grid_res
        self.dy = self.h / grid_res
        cx = self.minx + (np.arange(grid_res) + 0.5) * self.dx
        cy = self.miny + (np.arange(grid_res) + 0.5) * self.dy
        gx, gy = np.meshgrid(cx, cy)  # rho[iy, ix]
        centers = np.column_stack([gx.ravel(), gy.ravel()])

        rho = np.full(grid_res * grid_res, np.nan)
        for poly in polygons:
            density = poly.weight / poly.area
            unassigned = np.isnan(rho)
            if not unassigned.any():
                break
            hits = Path(poly.vertices).contains_points(centers[unassigned])
            idx = np.flatnonzero(unassigned)[hits]
            rho[idx] = density
        rho[np.isnan(rho)] = np.nanmean(rho)
        rho = rho.reshape(grid_res, grid_res)
        rho /= rho.mean()

        self.coeff = dctn(rho, norm="ortho")
        k = np.arange(grid_res)
        self.lam = (np.pi * k[:, None] / self.h) ** 2 + (np.pi * k[None, :] / self.w) ** 2

    def velocity(self, positions: np.ndarray, t: float) -> np.ndarray:
        rho = idctn(self.coeff * np.exp(-self.lam * t), norm="ortho")
        d_dy, d_dx = np.gradient(rho, self.dy, self.dx)
        rows = (positions[:, 1] - self.miny) / self.dy - 0.5
        cols = (positions[:, 0] - self.minx) / self.dx - 0.5
        coords = np.vstack([rows, cols])
        r = map_coordinates(rho, coords, order=1, mode="nearest")
        gx = map_coordinates(d_dx, coords, order=1, mode="nearest")
        gy = map_coordinates(d_dy, coords, order=1, mode="nearest")
        r = np.maximum(r, _RHO_FLOOR)
        return -np.column_stack([gx, gy]) / r[:, None]


def _cluster_errors(polygons, slices, positions, bbox_area, shares):
    errs = []
    for poly, sl, share in zip(polygons, slices, shares):
        if poly.kind != "cluster":
            continue
        target = bbox_area * share
        errs.append(float(abs(_shoelace(positions[sl]) - target) / target))
    return max(errs) if errs else 0.0


def diffusion_cartogram(
    polygons: list,
    params: CartogramParams = CartogramParams(),
    points=None,
) -> CartogramResult:
    """Advect the tiling until cluster areas match weight shares.

    Returns the deformed polygons (densified vertex loops), the advected
    passenger points if given, and the convergence record.  When the
    area tolerance is never reached the best iterate is returned with
    converged=False.
    """
    if not polygons:
        raise UsageError("no polygons")
    if any(p.weight <= 0 for p in polygons):
        raise UsageError("weights must be > 0")
    allv = np.vstack([p.vertices for p in polygons])
    bbox = (allv[:, 0].min(), allv[:, 1].min(), allv[:, 0].max(), allv[:, 1].max())
    bbox_area = (bbox[2] - bbox[0]) * (bbox[3] - bbox[1])
    if bbox_area <= 0:
        raise GeometryError("degenerate bbox")
    total_area = sum(p.area for p in polygons)
    if abs(total_area - bbox_area) > 0.01 * bbox_area:
        raise GeometryError("polygons do not tile their bounding box")

    total_weight = sum(p.weight for p in polygons)
    shares = [p.weight / total_weight for p in polygons]

    max_len = min(bbox[2] - bbox[0], bbox[3] - bbox[1]) / 64
    loops = [densify(p.vertices, max_len) for p in polygons]
    slices = []
    offset = 0
    for lo in loops:
        slices.append(slice(offset, offset + lo.shape[0]))
        offset += lo.shape[0]
    n_poly_verts = offset
    positions = np.vstack(loops)
    if points is not None:
        pts = np.asarray(points, dtype=float)
        positions = np.vstack([positions, pts])

    eps = 1e-9
    on_left = np.abs(positions[:, 0] - bbox[0]) < eps
    on_right = np.abs(positions[:, 0] - bbox[2]) < eps
    on_bottom = np.abs(positions[:, 1] - bbox[1]) < eps
    on_top = np.abs(positions[:, 1] - bbox[3]) < eps
    pin_x = on_left | on_right
    pin_y = on_bottom | on_top
    pinned_x = positions[:, 0].copy()
    pinned_y = positions[:, 1].copy()

    def settle(pos):
        pos[:, 0] = np.clip(pos[:, 0], bbox[0], bbox[2])
        pos[:, 1] = np.clip(pos[:, 1], bbox[1], bbox[3])
        pos[pin_x, 0] = pinned_x[pin_x]
        pos[pin_y, 1] = pinned_y[pin_y]
        return pos

    err = _cluster_errors(polygons, slices, positions, bbox_area, shares)
    if err <= params.area_tol:
        # already balanced: hand the inputs back untouched
        return CartogramResult(
            polygons=[p.with_vertices(p.vertices.copy()) for p in polygons],
            points=None if points is None else np.asarray(points, dtype=float).copy(),
            steps=0,
            converged=True,
            max_rel_error=err,
        )

    field = _DiffusionField(polygons, bbox, params.grid_res)
    best = (err, positions.copy(), 0)
    t_prev = 0.0
    for step in range(params.max_steps):
        t_next = T_START * T_GROWTH**step
        dt = t_next - t_prev
        k1 = field.velocity(positions, max(t_prev, T_START / 2))
        k2 = field.velocity(settle(positions + dt * k1), t_next)
        positions = settle(positions + dt * 0.5 * (k1 + k2))
        t_prev = t_next
        err = _cluster_errors(polygons, slices, positions, bbox_area, shares)
        if err < best[0]:
            best = (err, positions.copy(), step + 1)
        if t_next >= T_FINAL:
            break

    # The diffusion settles on its own timescale; report the best iterate
    # and let the tolerance decide whether that counts as converged.
    err, positions, steps = best
    converged = err <= params.area_tol

    out_polys = [p.with_vertices(positions[sl]) for p, sl in zip(polygons, slices)]
    out_points = positions[n_poly_verts:].copy() if points is not None else None
    return CartogramResult(
        polygons=out_polys,
        points=out_points,
        steps=steps,
        converged=converged,
        max_rel_error=err,
    )
