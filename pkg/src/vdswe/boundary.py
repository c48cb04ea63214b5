"""Boundary conditions: ghost cell averages for slopes and ghost face states for fluxes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import EAST, MASKED, NORTH, SOUTH, WEST, FaceSegments

WALL, EXTRAPOLATE, STATE = 0, 1, 2


@dataclass(frozen=True)
class SolidWall:
    """Reflecting wall: normal discharge is mirrored, everything else copied."""


@dataclass(frozen=True)
class Extrapolation:
    """Zero-order extrapolation (transmissive) boundary."""


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed ghost state in primitive variables."""

    w: float
    u: float = 0.0
    v: float = 0.0
    rho: float = 997.0


@dataclass(frozen=True)
class Inflow:
    """Prescribed state on the part of a side between ``lo`` and ``hi``; wall elsewhere.

    ``lo``/``hi`` are coordinates along the side (y for west/east sides).
    """

    u: float
    rho: float
    w: float = 1.0
    v: float = 0.0
    lo: float = -np.inf
    hi: float = np.inf

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"empty inflow segment [{self.lo}, {self.hi}]")


_KINDS = (SolidWall, Extrapolation, Dirichlet, Inflow)


@dataclass(frozen=True)
class BoundarySpec:
    west: object = field(default_factory=SolidWall)
    east: object = field(default_factory=SolidWall)
    south: object = field(default_factory=SolidWall)
    north: object = field(default_factory=SolidWall)

    def __post_init__(self):
        for name in ("west", "east", "south", "north"):
            bc = getattr(self, name)
            if not isinstance(bc, _KINDS):
                raise ValueError(f"boundary side {name!r} has no valid condition: {bc!r}")

    def side(self, tag: int):
        return {WEST: self.west, EAST: self.east, SOUTH: self.south, NORTH: self.north}[tag]

    @classmethod
    def walls(cls) -> "BoundarySpec":
        return cls()


@dataclass(frozen=True, eq=False)
class BoundarySegments:
    """Boundary segments of one axis with their resolved condition.

    ``cell`` is the interior leaf, ``outer_is_lo`` tells whether the ghost sits
    on the low (west/south) side of the segment, ``state`` holds the
    prescribed primitive state (w, u, v, rho) for STATE segments.
    """

    axis: int
    index: np.ndarray
    cell: np.ndarray
    outer_is_lo: np.ndarray
    kind: np.ndarray
    state: np.ndarray

    def __len__(self) -> int:
        return int(self.index.size)


def resolve_boundaries(spec: BoundarySpec, segs: FaceSegments) -> BoundarySegments:
    idx = np.flatnonzero(segs.tag != 0)
    tag = segs.tag[idx]
    outer_is_lo = segs.lo[idx] < 0
    cell = np.where(outer_is_lo, segs.hi[idx], segs.lo[idx])
    kind = np.full(idx.size, WALL, dtype=np.int64)
    state = np.zeros((idx.size, 4))
    along = segs.ym[idx] if segs.axis == 0 else segs.xm[idx]
    for t in (WEST, EAST, SOUTH, NORTH):
        sel = tag == t
        if not sel.any():
            continue
        bc = spec.side(t)
        if isinstance(bc, SolidWall):
            continue
        if isinstance(bc, Extrapolation):
            kind[sel] = EXTRAPOLATE
        elif isinstance(bc, Dirichlet):
            kind[sel] = STATE
            state[sel] = (bc.w, bc.u, bc.v, bc.rho)
        elif isinstance(bc, Inflow):
            inside = sel & (along >= bc.lo) & (along <= bc.hi)
            kind[inside] = STATE
            state[inside] = (bc.w, bc.u, bc.v, bc.rho)
    # faces against masked base cells are always walls
    kind[tag == MASKED] = WALL
    return BoundarySegments(segs.axis, idx, cell, outer_is_lo, kind, state)


def ghost_averages(bnd: BoundarySegments, P: np.ndarray, B_center: np.ndarray) -> np.ndarray:
    """Ghost cell averages of the primitive set (w, hu, hv, rho), one per boundary segment.

    The ghost mirrors the interior leaf (same size) across the segment.
    """
    inner = P[bnd.cell]
    ghost = inner.copy()
    normal = 1 + bnd.axis
    wall = bnd.kind == WALL
    ghost[wall, normal] = -inner[wall, normal]
    st = bnd.kind == STATE
    if st.any():
        w, u, v, rho = bnd.state[st].T
        h = np.maximum(w - B_center[bnd.cell[st]], 0.0)
        ghost[st] = np.column_stack([w, h * u, h * v, rho])
    return ghost


def ghost_face_states(bnd: BoundarySegments, inner: dict, B_seg: np.ndarray) -> dict:
    """Outer point values at boundary segments from the inner ones.

    ``inner`` maps w, h, u, v, rho to arrays over the boundary segments.
    """
    out = {k: np.array(v, copy=True) for k, v in inner.items()}
    normal = "u" if bnd.axis == 0 else "v"
    wall = bnd.kind == WALL
    out[normal][wall] = -inner[normal][wall]
    st = bnd.kind == STATE
    if st.any():
        w, u, v, rho = bnd.state[st].T
        out["w"][st] = w
        out["h"][st] = np.maximum(w - B_seg[st], 0.0)
        out["u"][st] = u
        out["v"][st] = v
        out["rho"][st] = rho
    return out


def apply_boundary_conditions(spec: BoundarySpec, segments, P: np.ndarray,
                              B_center: np.ndarray) -> list[np.ndarray]:
    """Ghost averages for both axes: ``[ghosts on x-faces, ghosts on y-faces]``."""
    return [ghost_averages(resolve_boundaries(spec, s), P, B_center) for s in segments]
