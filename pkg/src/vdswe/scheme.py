"""Semi-discrete central-upwind scheme on a fixed quadtree grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bathymetry import Bathymetry, build_bathymetry
from .boundary import BoundarySegments, BoundarySpec, resolve_boundaries
from .flux import assemble_rhs, cu_flux, local_speeds, source_nwb, source_wb
from .grid import FaceSegments, QuadtreeGrid, face_segments
from .reconstruction import FaceStates, ReconstructionInfo, reconstruct_face_states, regularization_eps

WELL_BALANCED = "wb"
NON_WELL_BALANCED = "nwb"


@dataclass(frozen=True)
class Model:
    """Physics and scheme options shared by every grid of a run."""

    bottom: Callable
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    g: float = 1.0
    rho0: float = 997.0
    source_mode: str = WELL_BALANCED

    def __post_init__(self):
        if self.source_mode not in (WELL_BALANCED, NON_WELL_BALANCED):
            raise ValueError(f"unknown source mode {self.source_mode!r}")
        if not (self.g > 0 and self.rho0 > 0):
            raise ValueError("g and rho0 must be positive")


@dataclass(frozen=True, eq=False)
class FacePoints:
    """Every (leaf, face segment) incidence, i.e. every point value a leaf reconstructs.

    Rows are grouped as [x low sides, x high sides, y low sides, y high sides];
    ``sign`` is +1 when the segment is on the leaf's east/north face and
    ``frac`` is the segment's share of that face.
    """

    cell: np.ndarray
    axis: np.ndarray
    seg: np.ndarray
    sign: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    frac: np.ndarray
    B: np.ndarray
    slices: dict

    def side_slices(self, axis: int):
        for side in ("lo", "hi"):
            sl = self.slices[(axis, side)]
            yield side, sl, self.seg[sl]


def _face_points(grid: QuadtreeGrid, segments, bathy: Bathymetry) -> FacePoints:
    cells, axes, segidx, signs, fracs, Bs = [], [], [], [], [], []
    slices = {}
    start = 0
    for segs in segments:
        face_len = grid.dy if segs.axis == 0 else grid.dx
        Bseg = bathy.segment_values(segs.axis)
        for side, arr, sgn in (("lo", segs.lo, 1.0), ("hi", segs.hi, -1.0)):
            idx = np.flatnonzero(arr >= 0)
            c = arr[idx]
            cells.append(c)
            axes.append(np.full(idx.size, segs.axis))
            segidx.append(idx)
            signs.append(np.full(idx.size, sgn))
            fracs.append(segs.length[idx] / face_len[c])
            Bs.append(Bseg[idx])
            slices[(segs.axis, side)] = slice(start, start + idx.size)
            start += idx.size
    cell = np.concatenate(cells)
    axis = np.concatenate(axes)
    seg = np.concatenate(segidx)
    xm = np.concatenate([segments[a].xm[s] for a, s in ((0, segidx[0]), (0, segidx[1]),
                                                        (1, segidx[2]), (1, segidx[3]))])
    ym = np.concatenate([segments[a].ym[s] for a, s in ((0, segidx[0]), (0, segidx[1]),
                                                        (1, segidx[2]), (1, segidx[3]))])
    return FacePoints(cell, axis, seg, np.concatenate(signs), xm - grid.xc[cell],
                      ym - grid.yc[cell], np.concatenate(fracs), np.concatenate(Bs), slices)


@dataclass(frozen=True, eq=False)
class Discretization:
    """Everything about a grid that does not depend on the solution."""

    grid: QuadtreeGrid
    segments: tuple[FaceSegments, FaceSegments]
    bathymetry: Bathymetry
    boundaries: tuple[BoundarySegments, BoundarySegments]
    points: FacePoints
    eps: float
    cache: dict = field(default_factory=dict, repr=False)

    def axis_data(self, axis: int):
        return self.segments[axis], self.boundaries[axis]

    @classmethod
    def build(cls, grid: QuadtreeGrid, model: Model) -> "Discretization":
        segments = face_segments(grid)
        bathy = build_bathymetry(model.bottom, grid, segments)
        bnd = tuple(resolve_boundaries(model.boundary, s) for s in segments)
        points = _face_points(grid, segments, bathy)
        return cls(grid, segments, bathy, bnd, points, regularization_eps(grid.dx, grid.dy))


@dataclass(frozen=True, eq=False)
class RhsResult:
    rhs: np.ndarray
    faces: list[FaceStates]
    fluxes: list[np.ndarray]
    speeds: list[tuple[np.ndarray, np.ndarray]]
    source: np.ndarray
    info: ReconstructionInfo

    @property
    def min_h(self) -> float:
        return float(min(min(f.minus.h.min(initial=np.inf), f.plus.h.min(initial=np.inf))
                         for f in self.faces))

    @property
    def min_rho(self) -> float:
        return float(min(min(f.minus.rho.min(initial=np.inf), f.plus.rho.min(initial=np.inf))
                         for f in self.faces))


def evaluate_rhs(disc: Discretization, U: np.ndarray, model: Model, t: float | None = None,
                 recon=None) -> RhsResult:
    """d/dt of the conservative cell averages (w, hu, hv, h*rho).

    ``recon`` may pass in the output of ``reconstruct_face_states`` for ``U``.
    """
    faces, info = recon if recon is not None else reconstruct_face_states(disc, U, t=t)
    fluxes, speeds = [], []
    for f in faces:
        sp = local_speeds(f.axis, f.minus, f.plus, model.g, model.rho0)
        speeds.append(sp)
        fluxes.append(cu_flux(f.axis, f.minus, f.plus, model.g, model.rho0, speeds=sp))
    if model.source_mode == WELL_BALANCED:
        S = source_wb(disc, info, model.g, model.rho0)
    else:
        S = source_nwb(disc.grid, U, disc.bathymetry.corners, model.g, model.rho0)
    rhs = assemble_rhs(disc.grid, disc.segments, fluxes, S)
    return RhsResult(rhs, faces, fluxes, speeds, S, info)


def cell_averages(disc: Discretization, w, u, v, rho, n_sub: int = 1) -> np.ndarray:
    """Conservative averages from initial-condition callables, midpoint-sampled.

    ``n_sub`` > 1 averages an ``n_sub x n_sub`` grid of sub-cell midpoints for
    w, u, v and rho before forming the products; h uses the cell value of B.
    """
    g = disc.grid
    offs = (np.arange(n_sub) + 0.5) / n_sub - 0.5
    acc = np.zeros((g.n_leaves, 4))
    for ox in offs:
        for oy in offs:
            x = g.xc + ox * g.dx
            y = g.yc + oy * g.dy
            acc += np.column_stack([np.broadcast_to(np.asarray(f(x, y), float), x.shape)
                                    for f in (w, u, v, rho)])
    acc /= n_sub * n_sub
    wbar = np.maximum(acc[:, 0], disc.bathymetry.center)
    h = wbar - disc.bathymetry.center
    return np.column_stack([wbar, h * acc[:, 1], h * acc[:, 2], h * acc[:, 3]])
