"""Level-set evolution of a region under the nonlocal contour force.

The region is embedded as the negative part of a signed distance field on
the pixel grid.  Each iteration extracts the zero contour, evaluates the
normal speed on its samples (curvature, area pressure, the pairwise
interaction sum, and optionally the image data terms), extends the speed
onto the grid, takes one upwind advection step, and periodically restores
the signed-distance property by fast sweeping.

Speeds are positive outward.  A positive curvature is that of a convex
region boundary, so the -lambda_c * kappa term shrinks circles.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from numba import njit
from scipy import ndimage
from skimage.measure import find_contours

from .likelihood import ImageGrid, LikelihoodParams, image_laplacian
from .stability import PriorParams

__all__ = [
    "LevelSetField",
    "BoundaryLoop",
    "BoundarySample",
    "EvolveOpts",
    "EvolveResult",
    "EmptyRegion",
    "init_shape",
    "field_from_mask",
    "mask_from_field",
    "extract_boundary",
    "prior_force",
    "data_force",
    "evolve",
    "redistance",
]

_BIG = 1e10


class EmptyRegion(ValueError):
    """The field contains no interior (negative) cells."""


@dataclass
class LevelSetField:
    """Signed distance grid, negative inside the region.

    Outside ``band_half_width`` the evolution clamps values, so only the
    band carries meaningful distances once iteration starts.  Freshly built
    fields hold exact distances everywhere.
    """

    values: np.ndarray
    band_half_width: float = np.inf

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("field must be 2-D")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


from typing import NamedTuple


class BoundarySample(NamedTuple):
    position: np.ndarray
    tangent: np.ndarray
    outward_normal: np.ndarray
    curvature: float


@dataclass
class BoundaryLoop:
    """One closed zero-contour polyline with per-sample geometry.

    Positions are (x, y) in pixel units.  Tangents are central differences
    per sample index (roughly unit length at ~1 px spacing); the outward
    normal is the tangent rotated to point into positive field values, so
    the two are exactly perpendicular and equally long.  ``arc_weight`` is
    the trapezoid weight of each sample along the polyline.
    """

    position: np.ndarray
    tangent: np.ndarray
    outward_normal: np.ndarray
    curvature: np.ndarray
    arc_weight: np.ndarray

    def __len__(self) -> int:
        return len(self.position)

    def __getitem__(self, i: int) -> BoundarySample:
        return BoundarySample(
            self.position[i], self.tangent[i],
            self.outward_normal[i], float(self.curvature[i]),
        )


@dataclass
class EvolveOpts:
    dt_cap: float = 0.5
    max_iters: int = 2000
    redistance_every: int = 20
    band_half_width: float | None = None  # None: max(8, d + epsilon + 2)
    tol: float = 1e-3
    # area/component stall detector: stop once both are steady over this many
    # iterations (0 disables).  Catches states pinned by image forces whose
    # residual speed jitter never falls below tol.
    stall_window: int = 0
    stall_tol: float = 0.002


@dataclass
class EvolveResult:
    field: LevelSetField
    log: list[tuple[int, float, int, int]]  # iter, max_speed, area, num_components
    converged: bool


# ---------------------------------------------------------------------------
# construction

def _shape_sdf(shape, xx: np.ndarray, yy: np.ndarray) -> np.ndarray:
    kind = shape[0]
    if kind == "circle":
        _, cx, cy, r = shape
        return np.hypot(xx - cx, yy - cy) - r
    if kind == "square":
        _, cx, cy, side = shape
        qx = np.abs(xx - cx) - side / 2.0
        qy = np.abs(yy - cy) - side / 2.0
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        return outside + np.minimum(np.maximum(qx, qy), 0.0)
    if kind == "rounded_rectangle":
        _, cx, cy, w, h, corner = shape
        qx = np.abs(xx - cx) - (w / 2.0 - corner)
        qy = np.abs(yy - cy) - (h / 2.0 - corner)
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        return outside + np.minimum(np.maximum(qx, qy), 0.0) - corner
    raise ValueError(f"unknown shape kind {kind!r}")


def init_shape(shapes, grid_shape, band_half_width: float = np.inf) -> LevelSetField:
    """Exact signed distance to a union of analytic shapes.

    ``shapes`` is a list of tuples: ("circle", cx, cy, r),
    ("square", cx, cy, side) or ("rounded_rectangle", cx, cy, w, h, corner_r).
    The union distance is the pointwise minimum (exact for disjoint shapes).
    """
    if not shapes:
        raise EmptyRegion("no shapes given")
    height, width = grid_shape
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    phi = np.full((height, width), _BIG)
    for shape in shapes:
        phi = np.minimum(phi, _shape_sdf(shape, xx, yy))
    if not np.any(phi < 0):
        raise EmptyRegion("shapes enclose no grid cell")
    return LevelSetField(phi, band_half_width)


def field_from_mask(mask: np.ndarray, band_half_width: float = np.inf) -> LevelSetField:
    """Signed distance field of a binary mask (True = region)."""
    mask = np.asarray(mask, bool)
    if not mask.any():
        raise EmptyRegion("mask has no region pixels")
    phi = (
        ndimage.distance_transform_edt(~mask)
        - ndimage.distance_transform_edt(mask)
        + np.where(mask, 0.5, -0.5)
    )
    out = LevelSetField(phi, band_half_width)
    out.values = redistance(out.values, band_half_width)
    return out


def mask_from_field(field: LevelSetField) -> np.ndarray:
    return field.values < 0


# ---------------------------------------------------------------------------
# boundary extraction

def _bilinear(arr: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = arr.shape
    x = np.clip(x, 0.0, w - 1.000001)
    y = np.clip(y, 0.0, h - 1.000001)
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    fx = x - x0
    fy = y - y0
    return (
        arr[y0, x0] * (1 - fx) * (1 - fy)
        + arr[y0, x0 + 1] * fx * (1 - fy)
        + arr[y0 + 1, x0] * (1 - fx) * fy
        + arr[y0 + 1, x0 + 1] * fx * fy
    )


def _curvature_grid(phi: np.ndarray) -> np.ndarray:
    # kappa = div(grad phi / |grad phi|), central differences
    gy, gx = np.gradient(phi)
    gyy, gyx = np.gradient(gy)
    gxy, gxx = np.gradient(gx)
    norm2 = gx**2 + gy**2
    kappa = (gxx * gy**2 - 2.0 * gx * gy * 0.5 * (gxy + gyx) + gyy * gx**2) / (
        norm2**1.5 + 1e-12
    )
    # small components legitimately reach |kappa| ~ 1/2; clip far spikes only
    return np.clip(kappa, -1.0, 1.0)


def extract_boundary(field: LevelSetField) -> list[BoundaryLoop]:
    """Zero-contour polylines with tangents, outward normals and curvature.

    Raises EmptyRegion when the field has no negative cell.
    """
    phi = field.values
    if not np.any(phi < 0):
        raise EmptyRegion("no region to extract")
    return _extract(phi)


def _extract(phi: np.ndarray, origin: tuple[float, float] = (0.0, 0.0)) -> list[BoundaryLoop]:
    kappa = _curvature_grid(phi)
    gy, gx = np.gradient(phi)
    loops = []
    for contour in find_contours(phi, 0.0):
        closed = np.hypot(*(contour[0] - contour[-1])) < 1e-9
        pts = contour[:-1] if closed else contour
        if len(pts) < 4:
            continue
        # find_contours yields (row, col); we work in (x, y)
        pos = pts[:, ::-1].copy()
        nxt = np.roll(pos, -1, axis=0)
        prv = np.roll(pos, 1, axis=0)
        tangent = 0.5 * (nxt - prv)
        seg_after = np.hypot(*(nxt - pos).T)
        seg_before = np.hypot(*(pos - prv).T)
        weight = 0.5 * (seg_after + seg_before)
        normal = np.column_stack((tangent[:, 1], -tangent[:, 0]))
        gxs = _bilinear(gx, pos[:, 0], pos[:, 1])
        gys = _bilinear(gy, pos[:, 0], pos[:, 1])
        if np.sum(normal[:, 0] * gxs + normal[:, 1] * gys) < 0:
            normal = -normal
        curv = _bilinear(kappa, pos[:, 0], pos[:, 1])
        pos[:, 0] += origin[0]
        pos[:, 1] += origin[1]
        loops.append(BoundaryLoop(pos, tangent, normal, curv, weight))
    return loops


def _flatten(loops) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    pos = np.concatenate([lp.position for lp in loops])
    nrm = np.concatenate([lp.outward_normal for lp in loops])
    curv = np.concatenate([lp.curvature for lp in loops])
    wt = np.concatenate([lp.arc_weight for lp in loops])
    mag = np.hypot(nrm[:, 0], nrm[:, 1])
    unit = nrm / np.maximum(mag, 1e-12)[:, None]
    return pos, unit, curv, wt


# ---------------------------------------------------------------------------
# forces

@njit(cache=True)
def _pair_force(pos, unit_normal, weight, d, eps):
    """beta-free interaction sum: sum_j (R_hat . n_j) Phi'(R) ds_j per sample.

    Fixed iteration order; pairs at or beyond d + eps skipped (Phi' = 0).
    """
    n = pos.shape[0]
    cutoff = d + eps
    inner = d - eps
    out = np.zeros(n)
    for i in range(n):
        xi = pos[i, 0]
        yi = pos[i, 1]
        acc = 0.0
        for j in range(n):
            dx = xi - pos[j, 0]
            dy = yi - pos[j, 1]
            r2 = dx * dx + dy * dy
            if r2 >= cutoff * cutoff or r2 < 1e-18:
                continue
            r = np.sqrt(r2)
            if r < inner:
                continue
            dphi = -(1.0 + np.cos(np.pi * (r - d) / eps)) / (2.0 * eps)
            acc += (dx * unit_normal[j, 0] + dy * unit_normal[j, 1]) / r * dphi * weight[j]
        out[i] = acc
    return out


def prior_force(loops, params: PriorParams) -> np.ndarray:
    """Normal speed from the shape prior, one value per sample (loops
    flattened in order): -lambda_c kappa - alpha_c + beta_c * pair sum.

    The pair sum runs over every sample of every loop, so separate
    components interact.
    """
    if isinstance(loops, BoundaryLoop):
        loops = [loops]
    pos, unit, curv, wt = _flatten(loops)
    nonlocal_term = _pair_force(pos, unit, wt, params.d, params.epsilon)
    return -params.lambda_c * curv - params.alpha_c + params.beta_c * nonlocal_term


def data_force(loops, image, lik: LikelihoodParams, _laplacian=None) -> np.ndarray:
    """Normal speed from the image terms at each sample (bilinear lookup).

    Sampled intensities are clamped to [0, 1] (values outside the nominal
    range carry no extra evidence).
    """
    if isinstance(loops, BoundaryLoop):
        loops = [loops]
    values = image.values if isinstance(image, ImageGrid) else np.asarray(image, float)
    lap = _laplacian if _laplacian is not None else image_laplacian(values)
    pos = np.concatenate([lp.position for lp in loops])
    ivals = np.clip(_bilinear(values, pos[:, 0], pos[:, 1]), 0.0, 1.0)
    lvals = _bilinear(lap, pos[:, 0], pos[:, 1])
    return (
        -lik.lambda_i * lvals
        - (ivals - lik.mu) ** 2 / (2.0 * lik.sigma**2)
        + (ivals - lik.mu_bar) ** 2 / (2.0 * lik.sigma_bar**2)
    )


# ---------------------------------------------------------------------------
# redistancing

@njit(cache=True)
def _sweep_eikonal(u, frozen):
    """Solve |grad u| = 1 by Gauss-Seidel sweeps in all four orderings."""
    ny, nx = u.shape
    for _ in range(2):
        for direction in range(4):
            if direction == 0:
                y0, y1, ys, x0, x1, xs = 0, ny, 1, 0, nx, 1
            elif direction == 1:
                y0, y1, ys, x0, x1, xs = 0, ny, 1, nx - 1, -1, -1
            elif direction == 2:
                y0, y1, ys, x0, x1, xs = ny - 1, -1, -1, 0, nx, 1
            else:
                y0, y1, ys, x0, x1, xs = ny - 1, -1, -1, nx - 1, -1, -1
            for y in range(y0, y1, ys):
                for x in range(x0, x1, xs):
                    if frozen[y, x]:
                        continue
                    a = _BIG
                    if x > 0 and u[y, x - 1] < a:
                        a = u[y, x - 1]
                    if x < nx - 1 and u[y, x + 1] < a:
                        a = u[y, x + 1]
                    b = _BIG
                    if y > 0 and u[y - 1, x] < b:
                        b = u[y - 1, x]
                    if y < ny - 1 and u[y + 1, x] < b:
                        b = u[y + 1, x]
                    if a > b:
                        a, b = b, a
                    if b - a >= 1.0:
                        cand = a + 1.0
                    else:
                        cand = 0.5 * (a + b + np.sqrt(2.0 - (b - a) * (b - a)))
                    if cand < u[y, x]:
                        u[y, x] = cand
    return u


def redistance(phi: np.ndarray, band_half_width: float = np.inf) -> np.ndarray:
    """Rebuild signed distances from the current zero crossings.

    Cells adjacent to a sign change are seeded with their interpolated
    subcell distance (so the interface does not move), then fast sweeping
    fills the rest.  The result is clamped to the band.
    """
    phi = np.asarray(phi, float)
    neg = phi < 0
    u = np.full(phi.shape, _BIG)
    frozen = np.zeros(phi.shape, bool)
    absphi = np.abs(phi)
    for axis in (0, 1):
        a = np.swapaxes(phi, 0, axis)
        ua = np.swapaxes(u, 0, axis)
        fa = np.swapaxes(frozen, 0, axis)
        cross = (a[:-1] < 0) != (a[1:] < 0)
        denom = np.abs(a[:-1]) + np.abs(a[1:])
        frac = np.where(denom > 0, np.abs(a[:-1]) / np.maximum(denom, 1e-300), 0.5)
        near = np.where(cross, frac, _BIG)
        far = np.where(cross, 1.0 - frac, _BIG)
        ua[:-1] = np.minimum(ua[:-1], near)
        ua[1:] = np.minimum(ua[1:], far)
        fa[:-1] |= cross
        fa[1:] |= cross
    # the axis fractions overestimate distance where the interface runs
    # diagonally; the first-order estimate |phi| / |grad phi| fixes that,
    # and taking the minimum keeps thin structures (near-zero gradient) safe
    gy, gx = np.gradient(phi)
    slope = np.hypot(gx, gy)
    est = np.where(slope > 1e-12, absphi / np.maximum(slope, 1e-12), _BIG)
    u = np.where(frozen, np.minimum(u, est), u)
    u[absphi == 0.0] = 0.0
    frozen |= absphi == 0.0
    if not frozen.any():
        # no interface at all: everything is one sign, keep a flat field
        return np.clip(phi, -band_half_width, band_half_width)
    u = _sweep_eikonal(u, frozen)
    out = np.where(neg, -u, u)
    return np.clip(out, -band_half_width, band_half_width)


# ---------------------------------------------------------------------------
# evolution

def _extend_speeds(shape, pos: np.ndarray, speeds: np.ndarray) -> np.ndarray:
    """Nearest-sample speed on the whole grid (samples rasterized to cells)."""
    grid = np.zeros(shape)
    count = np.zeros(shape)
    ix = np.clip(np.rint(pos[:, 0]).astype(int), 0, shape[1] - 1)
    iy = np.clip(np.rint(pos[:, 1]).astype(int), 0, shape[0] - 1)
    np.add.at(grid, (iy, ix), speeds)
    np.add.at(count, (iy, ix), 1.0)
    seeded = count > 0
    grid[seeded] /= count[seeded]
    idx = ndimage.distance_transform_edt(
        ~seeded, return_distances=False, return_indices=True
    )
    return grid[idx[0], idx[1]]


def _advect(phi: np.ndarray, speed: np.ndarray, dt: float, band: float) -> np.ndarray:
    padded = np.pad(phi, 1, mode="edge")
    dmx = phi - padded[1:-1, :-2]
    dpx = padded[1:-1, 2:] - phi
    dmy = phi - padded[:-2, 1:-1]
    dpy = padded[2:, 1:-1] - phi
    grad_plus = np.sqrt(
        np.maximum(dmx, 0) ** 2 + np.minimum(dpx, 0) ** 2
        + np.maximum(dmy, 0) ** 2 + np.minimum(dpy, 0) ** 2
    )
    grad_minus = np.sqrt(
        np.minimum(dmx, 0) ** 2 + np.maximum(dpx, 0) ** 2
        + np.minimum(dmy, 0) ** 2 + np.maximum(dpy, 0) ** 2
    )
    change = np.maximum(speed, 0) * grad_plus + np.minimum(speed, 0) * grad_minus
    out = np.where(np.abs(phi) < band, phi - dt * change, phi)
    return np.clip(out, -band, band)


def _drop_single_cells(phi: np.ndarray) -> None:
    # a 1-cell region component is below model resolution; flip it outside
    neg = phi < 0
    padded = np.pad(neg, 1, mode="constant")
    neighbors = (
        padded[:-2, 1:-1].astype(int) + padded[2:, 1:-1]
        + padded[1:-1, :-2] + padded[1:-1, 2:]
    )
    isolated = neg & (neighbors == 0)
    phi[isolated] = 0.5


def _band_window(phi: np.ndarray, pad: int = 3):
    near = np.abs(phi) < 1.5
    ys, xs = np.nonzero(near)
    if len(ys) == 0:
        return None
    y0 = max(int(ys.min()) - pad, 0)
    y1 = min(int(ys.max()) + pad + 1, phi.shape[0])
    x0 = max(int(xs.min()) - pad, 0)
    x1 = min(int(xs.max()) + pad + 1, phi.shape[1])
    return y0, y1, x0, x1


def evolve(
    field: LevelSetField,
    image=None,
    params: PriorParams | None = None,
    lik: LikelihoodParams | None = None,
    opts: EvolveOpts | None = None,
    on_iteration=None,
) -> EvolveResult:
    """Gradient-descent evolution of the region embedded in ``field``.

    ``image`` may be None for prior-only runs (then ``lik`` is unused).
    Stops when the maximum sample speed falls below ``opts.tol``, when the
    region vanishes (a legitimate stationary state), or at ``max_iters``
    (flagged as not converged).  The input field is not modified.
    """
    if params is None:
        raise ValueError("prior parameters are required")
    opts = opts or EvolveOpts()
    band = opts.band_half_width
    if band is None:
        band = max(8.0, params.d + params.epsilon + 2.0)

    phi = np.clip(field.values.astype(float), -band, band)
    if not np.any(phi < 0):
        raise EmptyRegion("initial field has no region")

    img_values = None
    lap = None
    if image is not None:
        img_values = image.values if isinstance(image, ImageGrid) else np.asarray(image, float)
        if img_values.shape != phi.shape:
            raise ValueError("image and field grids differ")
        if lik is None:
            raise ValueError("image given without likelihood parameters")
        lap = image_laplacian(img_values)

    log: list[tuple[int, float, int, int]] = []
    converged = False
    for iteration in range(opts.max_iters):
        neg = phi < 0
        area = int(neg.sum())
        if area == 0:
            log.append((iteration, 0.0, 0, 0))
            converged = True
            break
        ncomp = int(ndimage.label(neg)[1])

        window = _band_window(phi)
        y0, y1, x0, x1 = window
        loops = _extract(phi[y0:y1, x0:x1], origin=(float(x0), float(y0)))
        if not loops:
            log.append((iteration, 0.0, area, ncomp))
            converged = True
            break

        speed = prior_force(loops, params)
        if img_values is not None:
            speed = speed + data_force(loops, img_values, lik, _laplacian=lap)

        max_speed = float(np.max(np.abs(speed)))
        log.append((iteration, max_speed, area, ncomp))
        if on_iteration is not None:
            on_iteration(iteration, phi)
        if max_speed < opts.tol:
            converged = True
            break
        if opts.stall_window and len(log) >= opts.stall_window:
            tail = log[-opts.stall_window:]
            areas = [row[2] for row in tail]
            comps = {row[3] for row in tail}
            mid = float(np.median(areas))
            steady = max(abs(a - mid) for a in areas) <= max(2.0, opts.stall_tol * mid)
            if steady and len(comps) == 1:
                converged = True
                break

        pos = np.concatenate([lp.position for lp in loops])
        extended = _extend_speeds(phi.shape, pos, speed)
        dt = min(0.9 / max_speed, opts.dt_cap)
        phi = _advect(phi, extended, dt, band)
        _drop_single_cells(phi)
        if (iteration + 1) % opts.redistance_every == 0:
            phi = redistance(phi, band)

    return EvolveResult(LevelSetField(phi, band), log, converged)
