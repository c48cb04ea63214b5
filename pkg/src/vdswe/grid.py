"""Regularised quadtree grids generated from seeding points.

A grid is stored as a linear quadtree: every leaf is identified by its level
``l`` (1 = base cell) and its integer indices ``(i, j)`` among the
``nx * 2**(l-1)`` by ``ny * 2**(l-1)`` cells of that level.  Leaves are kept
in Morton (Z-curve) order of their lower-left corner on the finest level,
which makes every traversal deterministic.

Balance is the 2:1 rule on edges *and* corners.  Grids are never coarsened in
place; a new grid is generated from scratch from a set of seeding points and
then closed under the balance rule by refinement only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

# key layout: level | i | j, 28 bits per index
_IBITS = 28
_IMASK = (1 << _IBITS) - 1
_MAX_LEVEL = 26

# face / boundary tags for FaceSegments.tag
INTERIOR, WEST, EAST, SOUTH, NORTH, MASKED = 0, 1, 2, 3, 4, 5

# face numbering of a leaf (also the order of FaceSegments.owner_face)
FACE_W, FACE_E, FACE_S, FACE_N = 0, 1, 2, 3

# corner order used everywhere: SW, SE, NW, NE
CORNER_OFFSETS = ((0, 0), (1, 0), (0, 1), (1, 1))


class Cell(NamedTuple):
    id: int
    level: int
    center: tuple[float, float]
    size: tuple[float, float]


def _pack(level, i, j):
    level = np.asarray(level, dtype=np.int64)
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return (level << (2 * _IBITS)) | (i << _IBITS) | j


def _pack_ij(i, j):
    return (np.asarray(i, dtype=np.int64) << _IBITS) | np.asarray(j, dtype=np.int64)


def _unpack_ij(keys):
    keys = np.asarray(keys, dtype=np.int64)
    return keys >> _IBITS, keys & _IMASK


def _spread_bits(v):
    v = v.astype(np.uint64) & np.uint64(0xFFFFFFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x0000FFFF0000FFFF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x3333333333333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x5555555555555555)
    return v


def morton_code(i, j):
    """Interleave the bits of non-negative integer arrays ``i`` (x) and ``j`` (y)."""
    return _spread_bits(np.asarray(i)) | (_spread_bits(np.asarray(j)) << np.uint64(1))


@dataclass(frozen=True, eq=False)
class QuadtreeGrid:
    """Leaves of a quadtree over a rectangle tiled by ``nx x ny`` base cells.

    ``active`` optionally masks out base cells (shape ``(nx, ny)``); leaves are
    never created inside inactive base cells and their faces act as walls.
    """

    domain: tuple[float, float, float, float]
    base_shape: tuple[int, int]
    max_level: int
    level: np.ndarray
    i: np.ndarray
    j: np.ndarray
    active: np.ndarray | None = None

    def __post_init__(self):
        x0, x1, y0, y1 = self.domain
        nx, ny = self.base_shape
        shift = self.max_level - self.level
        fi = self.i.astype(np.int64) << shift
        fj = self.j.astype(np.int64) << shift
        order = np.argsort(morton_code(fi, fj), kind="stable")
        for name in ("level", "i", "j"):
            arr = np.ascontiguousarray(getattr(self, name)[order], dtype=np.int64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        keys = _pack(self.level, self.i, self.j)
        lookup = np.argsort(keys, kind="stable")
        object.__setattr__(self, "_sorted_keys", keys[lookup])
        object.__setattr__(self, "_sorted_index", lookup)
        scale = np.ldexp(1.0, -(self.level - 1))
        bdx = (x1 - x0) / nx
        bdy = (y1 - y0) / ny
        dx = bdx * scale
        dy = bdy * scale
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)
        object.__setattr__(self, "xc", x0 + (self.i + 0.5) * dx)
        object.__setattr__(self, "yc", y0 + (self.j + 0.5) * dy)
        object.__setattr__(self, "area", dx * dy)

    # -- basic queries -------------------------------------------------
    @property
    def n_leaves(self) -> int:
        return int(self.level.size)

    def __len__(self) -> int:
        return self.n_leaves

    @property
    def base_dx(self) -> float:
        return (self.domain[1] - self.domain[0]) / self.base_shape[0]

    @property
    def base_dy(self) -> float:
        return (self.domain[3] - self.domain[2]) / self.base_shape[1]

    def shape_at(self, level):
        nx, ny = self.base_shape
        return nx << (level - 1), ny << (level - 1)

    @property
    def keys(self) -> np.ndarray:
        """Unique leaf keys (level, i, j packed), in leaf order."""
        return _pack(self.level, self.i, self.j)

    def find(self, level, i, j) -> np.ndarray:
        """Leaf index for each (level, i, j) triple, -1 where no such leaf."""
        level = np.asarray(level, dtype=np.int64)
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        level, i, j = np.broadcast_arrays(level, i, j)
        out = np.full(level.shape, -1, dtype=np.int64)
        ok = (level >= 1) & (level <= self.max_level) & (i >= 0) & (j >= 0)
        if not ok.any():
            return out
        key = _pack(level[ok], i[ok], j[ok])
        pos = np.searchsorted(self._sorted_keys, key)
        pos = np.minimum(pos, self._sorted_keys.size - 1)
        hit = self._sorted_keys[pos] == key
        res = np.where(hit, self._sorted_index[pos], -1)
        out[ok] = res
        return out

    def is_active(self, level, i, j) -> np.ndarray:
        """True where the base cell under level-``level`` cell (i, j) is active and in range."""
        level = np.asarray(level, dtype=np.int64)
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        nx, ny = self.base_shape
        bi = i >> (level - 1)
        bj = j >> (level - 1)
        inside = (i >= 0) & (j >= 0) & (bi < nx) & (bj < ny)
        if self.active is None:
            return inside
        res = np.zeros(np.broadcast(bi, bj).shape, dtype=bool)
        bi_c = np.clip(bi, 0, nx - 1)
        bj_c = np.clip(bj, 0, ny - 1)
        res[...] = self.active[bi_c, bj_c]
        return inside & res

    def cell(self, k: int) -> Cell:
        return Cell(int(k), int(self.level[k]), (float(self.xc[k]), float(self.yc[k])),
                    (float(self.dx[k]), float(self.dy[k])))

    def fine_anchor(self):
        """Lower-left corner and size of each leaf in finest-level cell units."""
        shift = self.max_level - self.level
        return self.i << shift, self.j << shift, np.left_shift(1, shift)

    def same_leaves(self, other: "QuadtreeGrid") -> bool:
        return (self.n_leaves == other.n_leaves and self.base_shape == other.base_shape
                and self.max_level == other.max_level
                and np.array_equal(self.keys, other.keys))

    def contains(self, k: int, x: float, y: float, tol: float = 0.0) -> bool:
        hx, hy = 0.5 * self.dx[k] + tol, 0.5 * self.dy[k] + tol
        return abs(x - self.xc[k]) <= hx and abs(y - self.yc[k]) <= hy

    def locate(self, x: float, y: float) -> int:
        """Index of the leaf containing the point (lowest-index leaf on shared edges)."""
        x0, x1, y0, y1 = self.domain
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            raise ValueError(f"point ({x}, {y}) outside domain {self.domain}")
        for lev in range(1, self.max_level + 1):
            nxl, nyl = self.shape_at(lev)
            i = min(int((x - x0) / (x1 - x0) * nxl), nxl - 1)
            j = min(int((y - y0) / (y1 - y0) * nyl), nyl - 1)
            k = int(self.find(lev, i, j))
            if k >= 0:
                return k
        raise ValueError(f"point ({x}, {y}) is not covered by an active leaf")

    def internal_nodes(self) -> dict[int, np.ndarray]:
        """Keys (i, j packed) of the non-leaf nodes on each level below max_level."""
        nodes = {}
        for lev in range(1, self.max_level):
            deeper = self.level > lev
            shift = self.level[deeper] - lev
            keys = _pack_ij(self.i[deeper] >> shift, self.j[deeper] >> shift)
            nodes[lev] = np.unique(keys)
        return nodes

    # -- derived structure ---------------------------------------------
    def is_regularised(self) -> bool:
        nodes = self.internal_nodes()
        closed = _balance_closure({k: v.copy() for k, v in nodes.items()}, self.base_shape,
                                  self.max_level)
        return all(np.array_equal(nodes[k], closed[k]) for k in nodes)

    def dump(self, bathymetry_center: np.ndarray | None = None) -> str:
        """One line per leaf: ``level,cx,cy,dx,dy`` (plus ``B`` if given)."""
        lines = []
        for k in range(self.n_leaves):
            row = [str(int(self.level[k])), repr(float(self.xc[k])), repr(float(self.yc[k])),
                   repr(float(self.dx[k])), repr(float(self.dy[k]))]
            if bathymetry_center is not None:
                row.append(repr(float(bathymetry_center[k])))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    # -- constructors ----------------------------------------------------
    @classmethod
    def from_leaves(cls, domain, base_shape, max_level, levels, i, j, active=None,
                    check: bool = True) -> "QuadtreeGrid":
        grid = cls(tuple(float(v) for v in domain), tuple(int(v) for v in base_shape),
                   int(max_level), np.asarray(levels, dtype=np.int64),
                   np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64),
                   None if active is None else np.asarray(active, dtype=bool))
        if check:
            _check_tiling(grid)
        return grid


def _check_params(domain, base_shape, max_level):
    x0, x1, y0, y1 = (float(v) for v in domain)
    nx, ny = (int(v) for v in base_shape)
    m = int(max_level)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate domain {domain}")
    if nx < 1 or ny < 1:
        raise ValueError(f"base shape must be positive, got {base_shape}")
    if m < 1:
        raise ValueError(f"max_level must be >= 1, got {m}")
    if m > _MAX_LEVEL or (max(nx, ny) << (m - 1)) >= (1 << _IBITS):
        raise ValueError(f"max_level {m} too deep for base shape {base_shape}")
    finest = min((x1 - x0) / nx, (y1 - y0) / ny) * 2.0 ** (1 - m)
    if not finest > 0 or finest <= 1e-300 or x0 + finest == x0 or x1 - finest == x1:
        raise ValueError(f"max_level {m} makes the cell width underflow")
    return (x0, x1, y0, y1), (nx, ny), m


def _check_tiling(grid: QuadtreeGrid):
    nx, ny = grid.base_shape
    lev = grid.level
    if lev.size == 0:
        raise ValueError("grid has no leaves")
    if lev.min() < 1 or lev.max() > grid.max_level:
        raise ValueError("leaf level out of range")
    nxl = np.left_shift(nx, lev - 1)
    nyl = np.left_shift(ny, lev - 1)
    if np.any((grid.i < 0) | (grid.j < 0) | (grid.i >= nxl) | (grid.j >= nyl)):
        raise ValueError("leaf index out of range")
    if np.unique(grid.keys).size != lev.size:
        raise ValueError("duplicate leaves")
    # area in finest units must match the active base area, and no overlap
    fi, fj, s = grid.fine_anchor()
    n_active = nx * ny if grid.active is None else int(grid.active.sum())
    total = int(np.sum(s.astype(np.int64) ** 2))
    want = n_active * (1 << (2 * (grid.max_level - 1)))
    if total != want:
        raise ValueError(f"leaves do not tile the domain ({total} != {want} fine cells)")
    # overlap check: no leaf may have another leaf as an ancestor
    for lev_up in range(1, grid.max_level):
        deeper = lev > lev_up
        shift = lev[deeper] - lev_up
        anc = grid.find(np.full(shift.shape, lev_up), grid.i[deeper] >> shift,
                        grid.j[deeper] >> shift)
        if np.any(anc >= 0):
            raise ValueError("overlapping leaves")
    if not np.all(grid.is_active(lev, grid.i, grid.j)):
        raise ValueError("leaf inside an inactive base cell")


def _balance_closure(splits: dict[int, np.ndarray], base_shape, max_level) -> dict[int, np.ndarray]:
    """Close per-level split sets under the 2:1 edge+corner rule (refinement only).

    A split level-(l+1) node is covered by leaves of level >= l+2, so every
    level-l node touching it (edge or corner) must be split as well.
    """
    nx, ny = base_shape
    for lev in range(max_level - 2, 0, -1):
        child = splits.get(lev + 1)
        if child is None or child.size == 0:
            continue
        ci, cj = _unpack_ij(child)
        nxc, nyc = nx << lev, ny << lev
        parts = [splits.get(lev, np.empty(0, dtype=np.int64))]
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ni, nj = ci + di, cj + dj
                ok = (ni >= 0) & (nj >= 0) & (ni < nxc) & (nj < nyc)
                parts.append(_pack_ij(ni[ok] >> 1, nj[ok] >> 1))
        splits[lev] = np.unique(np.concatenate(parts))
    return splits


def _assemble(domain, base_shape, max_level, splits, active) -> QuadtreeGrid:
    nx, ny = base_shape
    bi, bj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    if active is not None:
        keep = active[bi, bj]
        bi, bj = bi[keep], bj[keep]
    nodes = np.sort(_pack_ij(bi.ravel(), bj.ravel()))
    levels, iis, jjs = [], [], []
    for lev in range(1, max_level + 1):
        split = splits.get(lev, np.empty(0, dtype=np.int64)) if lev < max_level else np.empty(0, np.int64)
        is_split = np.isin(nodes, split, assume_unique=True)
        leaf_keys = nodes[~is_split]
        li, lj = _unpack_ij(leaf_keys)
        levels.append(np.full(li.size, lev, dtype=np.int64))
        iis.append(li)
        jjs.append(lj)
        pi, pj = _unpack_ij(nodes[is_split])
        if pi.size == 0:
            break
        ci = np.concatenate([2 * pi, 2 * pi + 1, 2 * pi, 2 * pi + 1])
        cj = np.concatenate([2 * pj, 2 * pj, 2 * pj + 1, 2 * pj + 1])
        nodes = np.sort(_pack_ij(ci, cj))
    return QuadtreeGrid(domain, base_shape, max_level, np.concatenate(levels),
                        np.concatenate(iis), np.concatenate(jjs), active)


def _normalise_active(active, base_shape, domain):
    if active is None:
        return None
    nx, ny = base_shape
    if callable(active):
        x0, x1, y0, y1 = domain
        xc = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
        yc = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        active = active(X, Y)
    active = np.asarray(active, dtype=bool)
    if active.shape != (nx, ny):
        raise ValueError(f"active mask must have shape {(nx, ny)}, got {active.shape}")
    if not active.any():
        raise ValueError("active mask removes every base cell")
    active = active.copy()
    active.flags.writeable = False
    return active


def _seed_cells(seeds: np.ndarray, domain, base_shape, level) -> np.ndarray:
    """Keys of every level-``level`` cell whose closure contains a seed."""
    x0, x1, y0, y1 = domain
    nx, ny = base_shape
    nxl, nyl = nx << (level - 1), ny << (level - 1)
    tx = (seeds[:, 0] - x0) / (x1 - x0) * nxl
    ty = (seeds[:, 1] - y0) / (y1 - y0) * nyl

    def candidates(t, n):
        r = np.rint(t)
        on_line = np.abs(t - r) <= 1e-9 * max(n, 1)
        lo = np.where(on_line, r - 1, np.floor(t)).astype(np.int64)
        hi = np.where(on_line, r, np.floor(t)).astype(np.int64)
        return np.clip(lo, 0, n - 1), np.clip(hi, 0, n - 1)

    ilo, ihi = candidates(tx, nxl)
    jlo, jhi = candidates(ty, nyl)
    keys = np.concatenate([_pack_ij(ilo, jlo), _pack_ij(ihi, jlo), _pack_ij(ilo, jhi),
                           _pack_ij(ihi, jhi)])
    return np.unique(keys)


def build_grid(domain: Sequence[float], base_shape: Sequence[int], max_level: int,
               seeds=(), active: np.ndarray | Callable | None = None) -> QuadtreeGrid:
    """Regularised grid in which every leaf touching a seed point has level ``max_level``.

    Seeds lying exactly on a cell edge or vertex refine all cells sharing it,
    so symmetric seed sets give symmetric grids.
    """
    domain, base_shape, m = _check_params(domain, base_shape, max_level)
    active = _normalise_active(active, base_shape, domain)
    seeds = np.asarray(seeds, dtype=float).reshape(-1, 2)
    if seeds.size:
        x0, x1, y0, y1 = domain
        if not np.all(np.isfinite(seeds)):
            raise ValueError("non-finite seed point")
        outside = (seeds[:, 0] < x0) | (seeds[:, 0] > x1) | (seeds[:, 1] < y0) | (seeds[:, 1] > y1)
        if outside.any():
            bad = seeds[np.argmax(outside)]
            raise ValueError(f"seed point {tuple(bad)} outside domain {domain}")
    splits: dict[int, np.ndarray] = {}
    if seeds.size and m > 1:
        splits[m - 1] = _seed_cells(seeds, domain, base_shape, m - 1)
    # ancestors of seeded cells are picked up by the closure's 3x3 sweep
    splits = _balance_closure(splits, base_shape, m)
    return _assemble(domain, base_shape, m, splits, active)


def regularize(grid: QuadtreeGrid) -> QuadtreeGrid:
    """Refine ``grid`` until no two edge- or corner-adjacent leaves differ by more than one level."""
    splits = _balance_closure(grid.internal_nodes(), grid.base_shape, grid.max_level)
    return _assemble(grid.domain, grid.base_shape, grid.max_level, splits, grid.active)


@dataclass(frozen=True, eq=False)
class FaceSegments:
    """Interface segments normal to one axis (0: x-faces, 1: y-faces).

    ``lo``/``hi`` are the leaves on the low (west/south) and high (east/north)
    side, -1 on a boundary.  Each segment spans the face of its ``owner``,
    the finer (or, on a conforming face, the low-side) leaf, and ``owner_face``
    says which face of the owner it is.
    """

    axis: int
    lo: np.ndarray
    hi: np.ndarray
    xm: np.ndarray
    ym: np.ndarray
    length: np.ndarray
    tag: np.ndarray
    owner: np.ndarray
    owner_face: np.ndarray

    def __len__(self) -> int:
        return int(self.lo.size)

    @property
    def interior(self) -> np.ndarray:
        return self.tag == INTERIOR

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.tag == INTERIOR))

    @property
    def n_boundary(self) -> int:
        return len(self) - self.n_interior


def _segments_axis(grid: QuadtreeGrid, axis: int) -> FaceSegments:
    lev, I, J = grid.level, grid.i, grid.j
    k = np.arange(grid.n_leaves, dtype=np.int64)
    nxl = np.left_shift(grid.base_shape[0], lev - 1)
    nyl = np.left_shift(grid.base_shape[1], lev - 1)
    if axis == 0:
        along, across, n_along = I, J, nxl
        lo_tag, hi_tag, lo_face, hi_face = WEST, EAST, FACE_W, FACE_E

        def make(l, a, b):
            return l, a, b
    else:
        along, across, n_along = J, I, nyl
        lo_tag, hi_tag, lo_face, hi_face = SOUTH, NORTH, FACE_S, FACE_N

        def make(l, a, b):
            return l, b, a

    def find(l, a, b):
        return grid.find(*make(l, a, b))

    def masked(l, a, b):
        return ~grid.is_active(*make(l, a, b))

    parts = []  # (lo, hi, owner, owner_face, tag)

    # high-side look: same-level or coarser neighbor -> owner emits
    a_n = along + 1
    out = a_n >= n_along
    n_same = np.where(out, -1, find(lev, a_n, across))
    n_coarse = np.where(out | (lev == 1), -1, find(lev - 1, a_n >> 1, across >> 1))
    n_fine = np.where(out, -1, find(lev + 1, 2 * a_n, 2 * across))
    wall = out | (~out & masked(lev, np.minimum(a_n, n_along - 1), across))
    nbr = np.where(n_same >= 0, n_same, n_coarse)
    bad = (nbr < 0) & (n_fine < 0) & ~wall
    if bad.any():
        raise ValueError(f"grid is not 2:1 balanced at leaf {int(k[bad][0])}")
    sel = nbr >= 0
    parts.append((k[sel], nbr[sel], k[sel], np.full(sel.sum(), hi_face), np.full(sel.sum(), INTERIOR)))
    sel = wall
    tag = np.where(out[sel], hi_tag, MASKED)
    parts.append((k[sel], np.full(sel.sum(), -1), k[sel], np.full(sel.sum(), hi_face), tag))

    # low-side look: only coarser neighbors (same level is emitted from the other side)
    a_n = along - 1
    out = a_n < 0
    n_same = np.where(out, -1, find(lev, a_n, across))
    n_coarse = np.where(out | (lev == 1), -1, find(lev - 1, a_n >> 1, across >> 1))
    n_fine = np.where(out, -1, find(lev + 1, 2 * a_n + 1, 2 * across))
    wall = out | (~out & masked(lev, np.maximum(a_n, 0), across))
    bad = (n_same < 0) & (n_coarse < 0) & (n_fine < 0) & ~wall
    if bad.any():
        raise ValueError(f"grid is not 2:1 balanced at leaf {int(k[bad][0])}")
    sel = (n_coarse >= 0) & (n_same < 0)
    parts.append((n_coarse[sel], k[sel], k[sel], np.full(sel.sum(), lo_face), np.full(sel.sum(), INTERIOR)))
    sel = wall
    tag = np.where(out[sel], lo_tag, MASKED)
    parts.append((np.full(sel.sum(), -1), k[sel], k[sel], np.full(sel.sum(), lo_face), tag))

    lo, hi, owner, oface, tag = (np.concatenate(p).astype(np.int64) for p in zip(*parts))
    dx, dy = grid.dx[owner], grid.dy[owner]
    x0, _, y0, _ = grid.domain
    oi, oj = grid.i[owner], grid.j[owner]
    if axis == 0:
        xm = x0 + (oi + (oface == FACE_E)) * dx
        ym = grid.yc[owner]
        length = dy
    else:
        xm = grid.xc[owner]
        ym = y0 + (oj + (oface == FACE_N)) * dy
        length = dx
    return FaceSegments(axis, lo, hi, xm, ym, length.copy(), tag, owner, oface)


def face_segments(grid: QuadtreeGrid) -> tuple[FaceSegments, FaceSegments]:
    """All x-face and y-face segments of a 2:1 balanced grid, each listed once."""
    return _segments_axis(grid, 0), _segments_axis(grid, 1)


_DIRECTIONS = {"west": (0, -1), "east": (0, 1), "south": (1, -1), "north": (1, 1)}


def leaf_neighbors(grid: QuadtreeGrid, cell: int, direction: str) -> list[int]:
    """Leaves across one face of ``cell``: 0 (boundary), 1, or 2 (finer side)."""
    try:
        axis, sgn = _DIRECTIONS[direction]
    except KeyError:
        raise ValueError(f"unknown direction {direction!r}") from None
    lev, i, j = int(grid.level[cell]), int(grid.i[cell]), int(grid.j[cell])
    di, dj = (sgn, 0) if axis == 0 else (0, sgn)
    ni, nj = i + di, j + dj
    if not bool(grid.is_active(lev, ni, nj)):
        return []
    nxl, nyl = grid.shape_at(lev)
    if ni >= nxl or nj >= nyl:
        return []
    same = int(grid.find(lev, ni, nj))
    if same >= 0:
        return [same]
    if lev > 1:
        coarse = int(grid.find(lev - 1, ni >> 1, nj >> 1))
        if coarse >= 0:
            return [coarse]
    if axis == 0:
        fi = 2 * ni + (1 if sgn < 0 else 0)
        cand = [(fi, 2 * nj), (fi, 2 * nj + 1)]
    else:
        fj = 2 * nj + (1 if sgn < 0 else 0)
        cand = [(2 * ni, fj), (2 * ni + 1, fj)]
    found = [int(grid.find(lev + 1, a, b)) for a, b in cand]
    if any(f < 0 for f in found):
        raise ValueError(f"grid is not 2:1 balanced around leaf {cell}")
    return found


def parse_grid_dump(text: str) -> np.ndarray:
    """Inverse of :meth:`QuadtreeGrid.dump`: an ``(n, 5)`` or ``(n, 6)`` float array."""
    rows = [[float(v) for v in line.split(",")] for line in text.splitlines() if line.strip()]
    return np.asarray(rows, dtype=float)
