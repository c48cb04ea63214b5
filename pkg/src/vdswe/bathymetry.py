"""Continuous piecewise-bilinear bottom topography on a quadtree grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import FACE_E, FACE_N, FACE_S, FACE_W, FaceSegments, QuadtreeGrid, face_segments

# corners (SW, SE, NW, NE) at the two ends of each face of a leaf
FACE_CORNERS = {FACE_W: (0, 2), FACE_E: (1, 3), FACE_S: (0, 1), FACE_N: (2, 3)}


@dataclass(frozen=True, eq=False)
class Bathymetry:
    """Single-valued point values of B.

    corners: ``(n, 4)`` values at each leaf's SW, SE, NW, NE vertices.
    center:  ``(n,)`` cell value, the mean over the four faces of the face
             values (a split face contributes the mean of its two segments).
    seg_x, seg_y: values at the midpoints of the x- and y-face segments.
    """

    corners: np.ndarray
    center: np.ndarray
    seg_x: np.ndarray
    seg_y: np.ndarray

    def segment_values(self, axis: int) -> np.ndarray:
        return self.seg_x if axis == 0 else self.seg_y


def _sample(B_func, x, y):
    vals = np.asarray(B_func(x, y), dtype=float)
    vals = np.broadcast_to(vals, np.shape(x)).astype(float)
    if not np.all(np.isfinite(vals)):
        bad = np.flatnonzero(~np.isfinite(vals))[0]
        raise ValueError(f"bottom topography is not finite at ({x[bad]}, {y[bad]})")
    return vals


def corner_values(B_func: Callable, grid: QuadtreeGrid) -> np.ndarray:
    """B at leaf vertices; hanging vertices take the mean of their coarse edge's ends."""
    m = grid.max_level
    x0, x1, y0, y1 = grid.domain
    nxf, nyf = grid.shape_at(m)
    fi, fj, s = grid.fine_anchor()
    stride = nyf + 1

    cx = np.stack([fi, fi + s, fi, fi + s], axis=1)
    cy = np.stack([fj, fj, fj + s, fj + s], axis=1)
    ckeys = cx * stride + cy
    ukeys, inverse = np.unique(ckeys.ravel(), return_inverse=True)
    ux, uy = ukeys // stride, ukeys % stride
    hx = (x1 - x0) / nxf
    hy = (y1 - y0) / nyf
    # vertex coordinates from integer positions; exact on the domain edges
    px = np.where(ux == nxf, x1, x0 + ux * hx)
    py = np.where(uy == nyf, y1, y0 + uy * hy)
    values = _sample(B_func, px, py)

    # edge midpoints of non-finest leaves; those that are leaf vertices hang
    coarse = s > 1
    if coarse.any():
        h = s[coarse] // 2
        a, b, c = fi[coarse], fj[coarse], s[coarse]
        mids = [
            (a + h, b, (a, b), (a + c, b)),              # south edge
            (a + h, b + c, (a, b + c), (a + c, b + c)),  # north edge
            (a, b + h, (a, b), (a, b + c)),              # west edge
            (a + c, b + h, (a + c, b), (a + c, b + c)),  # east edge
        ]
        mkeys, mvals = [], []
        for mx, my, (ex0, ey0), (ex1, ey1) in mids:
            k = mx * stride + my
            hit = np.searchsorted(ukeys, k)
            hit = np.minimum(hit, ukeys.size - 1)
            is_vertex = ukeys[hit] == k
            if not is_vertex.any():
                continue
            e0 = np.searchsorted(ukeys, ex0 * stride + ey0)
            e1 = np.searchsorted(ukeys, ex1 * stride + ey1)
            mkeys.append(hit[is_vertex])
            mvals.append(0.5 * (values[e0[is_vertex]] + values[e1[is_vertex]]))
        if mkeys:
            values = values.copy()
            values[np.concatenate(mkeys)] = np.concatenate(mvals)
    return values[inverse].reshape(-1, 4)


def _segment_values(corners: np.ndarray, segs: FaceSegments) -> np.ndarray:
    out = np.empty(len(segs))
    for face, (c0, c1) in FACE_CORNERS.items():
        sel = segs.owner_face == face
        own = segs.owner[sel]
        out[sel] = 0.5 * (corners[own, c0] + corners[own, c1])
    return out


def _center_values(grid: QuadtreeGrid, segs_x: FaceSegments, segs_y: FaceSegments,
                   seg_x: np.ndarray, seg_y: np.ndarray) -> np.ndarray:
    n = grid.n_leaves
    acc = np.zeros(n)
    for segs, vals, face_len in ((segs_x, seg_x, grid.dy), (segs_y, seg_y, grid.dx)):
        for side in (segs.lo, segs.hi):
            ok = side >= 0
            c = side[ok]
            acc += np.bincount(c, weights=vals[ok] * segs.length[ok] / face_len[c], minlength=n)
    return 0.25 * acc


def build_bathymetry(B_func: Callable, grid: QuadtreeGrid,
                     segments: tuple[FaceSegments, FaceSegments] | None = None) -> Bathymetry:
    """Sample ``B_func`` (vectorised over numpy arrays) into a continuous bilinear field."""
    if segments is None:
        segments = face_segments(grid)
    segs_x, segs_y = segments
    corners = corner_values(B_func, grid)
    seg_x = _segment_values(corners, segs_x)
    seg_y = _segment_values(corners, segs_y)
    center = _center_values(grid, segs_x, segs_y, seg_x, seg_y)
    return Bathymetry(corners, center, seg_x, seg_y)


def eval_bilinear(field: Bathymetry, grid: QuadtreeGrid, cell: int, x, y, tol: float = 1e-12):
    """Bilinear blend of a leaf's four corner values at points inside the leaf."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx = (x - (grid.xc[cell] - 0.5 * grid.dx[cell])) / grid.dx[cell]
    sy = (y - (grid.yc[cell] - 0.5 * grid.dy[cell])) / grid.dy[cell]
    if np.any((sx < -tol) | (sx > 1 + tol) | (sy < -tol) | (sy > 1 + tol)):
        raise ValueError(f"point outside leaf {cell}")
    sw, se, nw, ne = field.corners[cell]
    return (1 - sy) * ((1 - sx) * sw + sx * se) + sy * ((1 - sx) * nw + sx * ne)
