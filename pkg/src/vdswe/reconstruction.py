"""Piecewise-linear reconstruction of (w, hu, hv, rho) on quadtree leaves.

Slopes are minmod-limited over one candidate per neighboring leaf (two across
a split face), point values are taken at the midpoints of face segments, the
water-surface reconstruction is corrected so that no point value falls below
the bottom, and velocities and density are desingularized near dry states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PositivityError(RuntimeError):
    """A cell average of the water depth (or h*rho) became negative."""

    def __init__(self, message, cell=None, t=None):
        super().__init__(message)
        self.cell = cell
        self.t = t


def minmod(candidates) -> float:
    """Smallest candidate if all are positive, largest if all negative, else 0."""
    z = np.asarray(candidates, dtype=float).ravel()
    if z.size == 0:
        raise ValueError("minmod needs at least one candidate")
    if np.all(z > 0):
        return float(z.min())
    if np.all(z < 0):
        return float(z.max())
    return 0.0


@dataclass(frozen=True, eq=False)
class Groups:
    """Rows sorted by cell index, for per-cell reductions with ``ufunc.reduceat``."""

    order: np.ndarray
    present: np.ndarray
    starts: np.ndarray
    n: int

    @classmethod
    def of(cls, cells: np.ndarray, n: int) -> "Groups":
        order = np.argsort(cells, kind="stable")
        sc = cells[order]
        present, starts = np.unique(sc, return_index=True)
        return cls(order, present, starts, n)

    def reduce(self, ufunc, values: np.ndarray, fill: float) -> np.ndarray:
        out = np.full((self.n,) + values.shape[1:], fill)
        if self.starts.size:
            out[self.present] = ufunc.reduceat(values[self.order], self.starts, axis=0)
        return out


def cached_groups(disc, key, cells: np.ndarray, n: int) -> Groups:
    """Groups stored on ``disc.cache`` (when it has one) since they only depend on the grid."""
    cache = getattr(disc, "cache", None)
    if cache is None:
        return Groups.of(cells, n)
    if key not in cache:
        cache[key] = Groups.of(cells, n)
    return cache[key]


def minmod_grouped(cells: np.ndarray, values: np.ndarray, n: int,
                   groups: Groups | None = None) -> np.ndarray:
    """Minmod of all candidate rows that share a cell index; rows are (k, ncomp)."""
    g = groups if groups is not None else Groups.of(cells, n)
    # cells without candidates get 0 from either branch
    lo = g.reduce(np.minimum, values, 0.0)
    hi = g.reduce(np.maximum, values, 0.0)
    return np.where(lo > 0, lo, np.where(hi < 0, hi, 0.0))


def max_abs_grouped(cells: np.ndarray, values: np.ndarray, n: int,
                    groups: Groups | None = None) -> np.ndarray:
    g = groups if groups is not None else Groups.of(cells, n)
    return np.maximum(g.reduce(np.maximum, np.abs(values), 0.0), 0.0)


def desingularize(h, q, eps: float):
    """sqrt(2) h q / sqrt(h^4 + max(h^4, eps)), i.e. q/h wherever h^4 >= eps."""
    h = np.asarray(h, dtype=float)
    q = np.asarray(q, dtype=float)
    h4 = h ** 4
    big = h4 >= eps
    safe_h = np.where(big, h, 1.0)
    small = np.sqrt(2.0) * h * q / np.sqrt(h4 + np.maximum(h4, eps))
    return np.where(big, q / safe_h, small)


def desingularize_factor(h, eps: float):
    """Factor f with desingularize(h, h*r, eps) == f*r; exactly 1 where h^4 >= eps."""
    h = np.asarray(h, dtype=float)
    h4 = h ** 4
    return np.where(h4 >= eps, 1.0, np.sqrt(2.0) * h * h / np.sqrt(h4 + np.maximum(h4, eps)))


def regularization_eps(dx: np.ndarray, dy: np.ndarray) -> float:
    return float(max(np.min(dx) ** 4, np.min(dy) ** 4))


def slope_candidates(axis_data, P: np.ndarray, ghosts, center_along, size_along):
    """One-sided difference quotients for one axis.

    Returns (cells, values): every interior segment contributes the same
    quotient to both of its leaves, every boundary segment one quotient
    against its mirrored ghost.
    """
    segs, bnd = axis_data
    lo, hi = segs.lo, segs.hi
    inner = (lo >= 0) & (hi >= 0)
    a, b = lo[inner], hi[inner]
    diff = (P[b] - P[a]) / (center_along[b] - center_along[a])[:, None]
    c = bnd.cell
    dist = size_along[c][:, None]
    gdiff = np.where(bnd.outer_is_lo[:, None], (P[c] - ghosts) / dist, (ghosts - P[c]) / dist)
    cells = np.concatenate([a, b, c])
    values = np.concatenate([diff, diff, gdiff])
    return cells, values


def compute_slopes(disc, P: np.ndarray, ghosts) -> tuple[np.ndarray, np.ndarray]:
    """Minmod-limited slopes (dP/dx, dP/dy), each of shape (n, 4)."""
    g = disc.grid
    n = g.n_leaves
    cx, vx = slope_candidates(disc.axis_data(0), P, ghosts[0], g.xc, g.dx)
    cy, vy = slope_candidates(disc.axis_data(1), P, ghosts[1], g.yc, g.dy)
    return (minmod_grouped(cx, vx, n, cached_groups(disc, "slopes-x", cx, n)),
            minmod_grouped(cy, vy, n, cached_groups(disc, "slopes-y", cy, n)))


def point_values(disc, P: np.ndarray, Sx: np.ndarray, Sy: np.ndarray) -> np.ndarray:
    """Linear reconstruction of every leaf at the midpoints of its face segments."""
    fp = disc.points
    c = fp.cell
    return P[c] + Sx[c] * fp.dx[:, None] + Sy[c] * fp.dy[:, None]


@dataclass(frozen=True, eq=False)
class WCorrection:
    """Outcome of the water-surface positivity correction.

    ``scale`` multiplies the w-slopes of a leaf (1 where untouched); leaves in
    ``flat_depth`` could not be fixed by scaling and use point values
    ``B + hbar`` instead, whose effective slopes are in ``wx``/``wy``.
    """

    w_points: np.ndarray
    scale: np.ndarray
    flat_depth: np.ndarray
    wx: np.ndarray
    wy: np.ndarray


def correct_w_slope(disc, w_bar: np.ndarray, h_bar: np.ndarray, wx: np.ndarray,
                    wy: np.ndarray, t: float | None = None, tol: float = 0.0) -> WCorrection:
    """Limit w-slopes so every face point value satisfies w >= B.

    A leaf whose raw point values dip below the bottom gets its w-slopes scaled
    by the largest factor in [0, 1] that removes the violation.  If even the
    zero slope is infeasible (the bottom at some face point lies above the
    cell's mean surface, i.e. a partially dry leaf) the depth is reconstructed
    flat: w = B + hbar at every face point.  Both choices keep the weighted
    mean of the face depths equal to hbar.
    """
    fp = disc.points
    n = w_bar.size
    if np.any(h_bar < -tol):
        k = int(np.argmin(h_bar))
        raise PositivityError(f"negative mean depth {h_bar[k]:.3e} in leaf {k}"
                              + ("" if t is None else f" at t={t}"), cell=k, t=t)
    c = fp.cell
    d = wx[c] * fp.dx + wy[c] * fp.dy
    w_pts = w_bar[c] + d
    groups = cached_groups(disc, "points", c, n)
    margin = groups.reduce(np.minimum, w_pts - fp.B, np.inf)
    scale = np.ones(n)
    flat = np.zeros(n, dtype=bool)
    bad = margin < 0
    if bad.any():
        top = groups.reduce(np.maximum, fp.B, -np.inf)
        feasible = w_bar >= top
        theta = np.ones(n)
        neg = d < 0
        ratio = np.where(neg, (w_bar[c] - fp.B) / np.where(neg, -d, 1.0), np.inf)
        np.minimum.at(theta, c[neg], ratio[neg])
        theta = np.clip(theta, 0.0, 1.0)
        scale = np.where(bad & feasible, theta, 1.0)
        flat = bad & ~feasible
        w_pts = w_bar[c] + scale[c] * d
        fl = flat[c]
        w_pts[fl] = fp.B[fl] + np.maximum(h_bar[c[fl]], 0.0)
    wx_eff = wx * scale
    wy_eff = wy * scale
    if flat.any():
        g = disc.grid
        for axis, size, out in ((0, g.dx, wx_eff), (1, g.dy, wy_eff)):
            sel = (fp.axis == axis) & flat[c]
            jump = np.bincount(c[sel], weights=fp.sign[sel] * fp.frac[sel] * w_pts[sel], minlength=n)
            out[flat] = jump[flat] / size[flat]
    return WCorrection(w_pts, scale, flat, wx_eff, wy_eff)


@dataclass(frozen=True, eq=False)
class SideStates:
    """Point values on one side of every segment of one axis."""

    w: np.ndarray
    h: np.ndarray
    u: np.ndarray
    v: np.ndarray
    rho: np.ndarray

    @property
    def hu(self):
        return self.h * self.u

    @property
    def hv(self):
        return self.h * self.v

    @property
    def hrho(self):
        return self.h * self.rho

    def as_dict(self):
        return {"w": self.w, "h": self.h, "u": self.u, "v": self.v, "rho": self.rho}


@dataclass(frozen=True, eq=False)
class FaceStates:
    """Two-sided point values of one axis: ``minus`` = low (west/south) side."""

    axis: int
    minus: SideStates
    plus: SideStates
    B: np.ndarray


def reconstruct_face_states(disc, U: np.ndarray, t: float | None = None, tol: float = 1e-13):
    """Full reconstruction pipeline from conservative cell averages.

    Returns ``(faces, info)`` where ``faces`` is ``[FaceStates x, FaceStates y]``
    and ``info`` carries the per-leaf quantities the source term and the
    adaptivity step reuse (primitive averages, slopes, corrected w-slopes and
    the per-point depths/densities).
    """
    from .boundary import ghost_averages, ghost_face_states

    g = disc.grid
    n = g.n_leaves
    Bc = disc.bathymetry.center
    w, hu, hv, hr = U[:, 0], U[:, 1], U[:, 2], U[:, 3]
    h_bar = w - Bc
    scale_h = np.maximum(np.abs(w), 1.0)
    if np.any(h_bar < -tol * scale_h):
        k = int(np.argmin(h_bar / scale_h))
        raise PositivityError(f"negative mean depth {h_bar[k]:.3e} in leaf {k}"
                              + ("" if t is None else f" at t={t}"), cell=k, t=t)
    h_pos = np.maximum(h_bar, 0.0)
    rho_c = np.maximum(desingularize(h_pos, hr, disc.eps), 0.0)
    P = np.column_stack([w, hu, hv, rho_c])
    ghosts = [ghost_averages(disc.boundaries[a], P, Bc) for a in (0, 1)]
    Sx, Sy = compute_slopes(disc, P, ghosts)

    fp = disc.points
    pts = point_values(disc, P, Sx, Sy)
    corr = correct_w_slope(disc, w, h_pos, Sx[:, 0], Sy[:, 0], t=t)
    w_pts = corr.w_points
    h_pts = np.maximum(w_pts - fp.B, 0.0)
    fac = desingularize_factor(h_pts, disc.eps)
    rho_pts = np.maximum(pts[:, 3], 0.0) * fac
    u_pts = desingularize(h_pts, pts[:, 1], disc.eps)
    v_pts = desingularize(h_pts, pts[:, 2], disc.eps)

    faces = []
    for axis in (0, 1):
        segs, bnd = disc.axis_data(axis)
        ns = len(segs)
        sides = {}
        for side_name, sl, seg_idx in fp.side_slices(axis):
            arrs = {}
            for key, src in (("w", w_pts), ("h", h_pts), ("u", u_pts), ("v", v_pts), ("rho", rho_pts)):
                a = np.zeros(ns)
                a[seg_idx] = src[sl]
                arrs[key] = a
            sides[side_name] = arrs
        minus, plus = sides["lo"], sides["hi"]
        if len(bnd):
            B_seg = disc.bathymetry.segment_values(axis)[bnd.index]
            inner = {k: np.where(bnd.outer_is_lo, plus[k][bnd.index], minus[k][bnd.index])
                     for k in minus}
            outer = ghost_face_states(bnd, inner, B_seg)
            for k in minus:
                minus[k][bnd.index] = np.where(bnd.outer_is_lo, outer[k], minus[k][bnd.index])
                plus[k][bnd.index] = np.where(bnd.outer_is_lo, plus[k][bnd.index], outer[k])
        faces.append(FaceStates(axis, SideStates(**minus), SideStates(**plus),
                                disc.bathymetry.segment_values(axis)))
    info = ReconstructionInfo(P, Sx, Sy, h_bar, rho_c, corr, h_pts, rho_pts)
    return faces, info


@dataclass(frozen=True, eq=False)
class ReconstructionInfo:
    P: np.ndarray
    Sx: np.ndarray
    Sy: np.ndarray
    h_bar: np.ndarray
    rho_c: np.ndarray
    correction: WCorrection
    h_points: np.ndarray
    rho_points: np.ndarray
