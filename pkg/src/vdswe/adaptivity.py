"""Gradient-driven regridding and conservative projection between quadtree grids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boundary import ghost_averages
from .grid import QuadtreeGrid, _pack, build_grid
from .reconstruction import (ReconstructionInfo, max_abs_grouped,
                             reconstruct_face_states, slope_candidates)
from .scheme import Discretization, Model, cell_averages


@dataclass(frozen=True)
class SeedCriteria:
    """Refine where |w_x|, |w_y| >= c_w or |rho_x|, |rho_y| >= c_rho."""

    c_w: float = np.inf
    c_rho: float = np.inf

    def __post_init__(self):
        if not (self.c_w >= 0 and self.c_rho >= 0):
            raise ValueError("seed thresholds must be nonnegative")

    def flags(self, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
        """Boolean flags from per-leaf gradient columns (w at 0, rho at 3)."""
        return ((np.abs(gx[:, 0]) >= self.c_w) | (np.abs(gy[:, 0]) >= self.c_w)
                | (np.abs(gx[:, 3]) >= self.c_rho) | (np.abs(gy[:, 3]) >= self.c_rho))


def flag_seed_points(grid: QuadtreeGrid, Sx: np.ndarray, Sy: np.ndarray,
                     criteria: SeedCriteria) -> np.ndarray:
    """Centers ``(k, 2)`` of the leaves whose limited slopes reach a threshold."""
    hit = criteria.flags(Sx, Sy)
    return np.column_stack([grid.xc[hit], grid.yc[hit]])


def max_differences(disc: Discretization, P: np.ndarray, ghosts) -> tuple[np.ndarray, np.ndarray]:
    """Largest |one-sided difference quotient| per leaf and axis (unlimited)."""
    g = disc.grid
    n = g.n_leaves
    cx, vx = slope_candidates(disc.axis_data(0), P, ghosts[0], g.xc, g.dx)
    cy, vy = slope_candidates(disc.axis_data(1), P, ghosts[1], g.yc, g.dy)
    return max_abs_grouped(cx, vx, n), max_abs_grouped(cy, vy, n)


# -- projection ----------------------------------------------------------

def _sorted_lookup(lev: int, ij: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Row of ``ij`` matching each (i, j), -1 where absent."""
    if ij.shape[0] == 0:
        return np.full(np.shape(i), -1)
    keys = _pack(lev, ij[:, 0], ij[:, 1])
    order = np.argsort(keys)
    want = _pack(lev, i, j)
    pos = np.minimum(np.searchsorted(keys, want, sorter=order), keys.size - 1)
    return np.where(keys[order[pos]] == want, order[pos], -1)


def _node_values(old: QuadtreeGrid, U: np.ndarray) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Averages on every node of the old tree, by level: ``(ij rows, values)``.

    Internal nodes combine their four children as ((SW + SE) + (NW + NE)) / 4,
    so a constant field is reproduced exactly on every level.
    """
    nodes = {}
    for lev in range(old.max_level, 0, -1):
        sel = old.level == lev
        ij = [np.column_stack([old.i[sel], old.j[sel]])]
        vals = [U[sel]]
        if lev + 1 in nodes and nodes[lev + 1][0].shape[0]:
            cij, cvals = nodes[lev + 1]
            parent = np.unique(cij >> 1, axis=0)
            quads = [cvals[_sorted_lookup(lev + 1, cij, 2 * parent[:, 0] + di, 2 * parent[:, 1] + dj)]
                     for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1))]
            ij.append(parent)
            vals.append(((quads[0] + quads[1]) + (quads[2] + quads[3])) * 0.25)
        nodes[lev] = (np.concatenate(ij), np.concatenate(vals))
    return nodes


def projection_slopes(disc: Discretization, U: np.ndarray,
                      info: ReconstructionInfo) -> tuple[np.ndarray, np.ndarray]:
    """Slopes used to refine a leaf: corrected w-slopes and minmod slopes of hu, hv.

    The h*rho column gets no slope; refined children redistribute it through
    ``rebalance_hrho`` instead.
    """
    corr = info.correction
    Sx = info.Sx.copy()
    Sy = info.Sy.copy()
    Sx[:, 0] = np.where(corr.flat_depth, 0.0, corr.wx)
    Sy[:, 0] = np.where(corr.flat_depth, 0.0, corr.wy)
    # hu, hv slopes of the primitive set are those of the conservative components
    Sx[:, 3] = 0.0
    Sy[:, 3] = 0.0
    return Sx, Sy


def refined_ancestors(old: QuadtreeGrid, new: QuadtreeGrid) -> np.ndarray:
    """Old leaf strictly containing each new leaf, -1 where there is none."""
    anc = np.full(new.n_leaves, -1)
    todo = old.find(new.level, new.i, new.j) < 0
    for p in range(1, old.max_level):
        cand = np.flatnonzero(todo & (anc < 0) & (new.level - p >= 1))
        if cand.size == 0:
            break
        anc[cand] = old.find(new.level[cand] - p, new.i[cand] >> p, new.j[cand] >> p)
    return anc


def rebalance_hrho(old: QuadtreeGrid, U_old: np.ndarray, Bc_old: np.ndarray,
                   rho_old: np.ndarray, rho_sx: np.ndarray, rho_sy: np.ndarray,
                   new: QuadtreeGrid, U_new: np.ndarray, Bc_new: np.ndarray) -> None:
    """Set h*rho on refined and coarsened leaves from the new depths, in place.

    Refined children get depth times the parent's limited linear density,
    shifted so their depth-weighted mean density equals the parent's (the
    slope shrinks if the shift would leave the original range).  A
    coarsened leaf gets its depth times the depth-weighted mean density of
    its old descendants.  When the bottom does not change between the grids
    (the depths then carry over exactly) the h*rho integral is preserved;
    otherwise the mass follows the depth change and the density stays put.
    New leaves whose old source was dry are set dry (w = B), since a moved
    bottom value would otherwise create water of zero density.
    """
    h_old = np.maximum(U_old[:, 0] - Bc_old, 0.0)
    h_new = np.maximum(U_new[:, 0] - Bc_new, 0.0)
    anc = refined_ancestors(old, new)
    ref = np.flatnonzero(anc >= 0)
    if ref.size:
        a = anc[ref]
        n = old.n_leaves
        wet = h_old > 0
        rho_bar = np.where(wet, U_old[:, 3] / np.where(wet, h_old, 1.0), rho_old)
        d = rho_sx[a] * (new.xc[ref] - old.xc[a]) + rho_sy[a] * (new.yc[ref] - old.yc[a])
        # slopes of a desingularized (shallow) parent are measured from a biased value
        d[rho_old[a] != rho_bar[a]] = 0.0
        wgt = h_new[ref] * new.area[ref]
        tot_h = np.bincount(a, weights=wgt, minlength=n)
        shift = -np.bincount(a, weights=wgt * d, minlength=n) / np.where(tot_h > 0, tot_h, 1.0)
        dev = d + shift[a]
        # shrink the profile so the shifted values stay inside the unshifted range
        extent = max_abs_grouped(a, d, n)
        reach = max_abs_grouped(a, dev, n)
        theta = np.where(reach > extent, extent / np.where(reach > 0, reach, 1.0), 1.0)
        rho = np.maximum(rho_bar[a] + theta[a] * dev, 0.0)
        U_new[ref, 3] = np.where(wet[a], h_new[ref] * rho, 0.0)
        _make_dry(U_new, Bc_new, ref[~wet[a]])
    idx = old.find(new.level, new.i, new.j)
    # a kept leaf can still see its bottom value move when a hanging corner is resolved
    moved = np.flatnonzero(idx >= 0)
    moved = moved[Bc_new[moved] != Bc_old[idx[moved]]]
    if moved.size:
        k = idx[moved]
        wet = h_old[k] > 0
        U_new[moved, 3] = np.where(wet, h_new[moved] * U_old[k, 3] / np.where(wet, h_old[k], 1.0),
                                   0.0)
        _make_dry(U_new, Bc_new, moved[~wet])
    coarse = (idx < 0) & (anc < 0)
    if coarse.any():
        nodes = _node_values(old, np.column_stack([h_old, U_old[:, 3]]))
        for lev in np.unique(new.level[coarse]):
            sel = np.flatnonzero(coarse & (new.level == lev))
            ij, vals = nodes[int(lev)]
            pos = _sorted_lookup(int(lev), ij, new.i[sel], new.j[sel])
            hbar, hr = vals[pos, 0], vals[pos, 1]
            wet = hbar > 0
            U_new[sel, 3] = np.where(wet, h_new[sel] * hr / np.where(wet, hbar, 1.0), 0.0)
            _make_dry(U_new, Bc_new, sel[~wet])


def _make_dry(U: np.ndarray, Bc: np.ndarray, rows: np.ndarray) -> None:
    U[rows, 0] = Bc[rows]
    U[rows, 1:] = 0.0


def project_solution(old: QuadtreeGrid, U: np.ndarray, Sx: np.ndarray, Sy: np.ndarray,
                     new: QuadtreeGrid) -> np.ndarray:
    """Averages on ``new`` from averages and slopes on ``old``.

    Same leaf: copied.  Refined leaf: the ancestor's linear profile at the new
    center.  Coarsened leaf: mean of its old descendants.
    """
    if (old.domain != new.domain or old.base_shape != new.base_shape
            or old.max_level != new.max_level):
        raise ValueError("grids do not share a base grid")
    out = np.full((new.n_leaves, U.shape[1]), np.nan)
    idx = old.find(new.level, new.i, new.j)
    same = idx >= 0
    out[same] = U[idx[same]]
    todo = ~same
    if todo.any():
        anc = refined_ancestors(old, new)
        ref = anc >= 0
        if ref.any():
            a = anc[ref]
            ox = (new.xc[ref] - old.xc[a])[:, None]
            oy = (new.yc[ref] - old.yc[a])[:, None]
            out[ref] = U[a] + Sx[a] * ox + Sy[a] * oy
            todo &= ~ref
    if todo.any():
        nodes = _node_values(old, U)
        for lev in np.unique(new.level[todo]):
            sel = np.flatnonzero(todo & (new.level == lev))
            ij, vals = nodes[int(lev)]
            pos = _sorted_lookup(int(lev), ij, new.i[sel], new.j[sel])
            if np.any(pos < 0):
                k = int(sel[np.argmax(pos < 0)])
                raise ValueError(f"new leaf {k} is not nested with the old grid")
            out[sel] = vals[pos]
    return out


@dataclass(frozen=True, eq=False)
class AdaptResult:
    disc: Discretization
    U: np.ndarray
    seeds: np.ndarray
    changed: bool
    recon: tuple | None = None


def adapt(disc: Discretization, U: np.ndarray, model: Model, criteria: SeedCriteria,
          t: float | None = None, info: ReconstructionInfo | None = None) -> AdaptResult:
    """Flag, rebuild the grid from scratch and project the solution onto it."""
    recon = None
    if info is None:
        recon = reconstruct_face_states(disc, U, t=t)
        info = recon[1]
    old = disc.grid
    seeds = flag_seed_points(old, info.Sx, info.Sy, criteria)
    new = build_grid(old.domain, old.base_shape, old.max_level, seeds=seeds, active=old.active)
    if new.same_leaves(old):
        return AdaptResult(disc, U, seeds, False, recon)
    Sx, Sy = projection_slopes(disc, U, info)
    U_new = project_solution(old, U, Sx, Sy, new)
    new_disc = Discretization.build(new, model)
    Bc = new_disc.bathymetry.center
    U_new[:, 0] = np.maximum(U_new[:, 0], Bc)
    rebalance_hrho(old, U, disc.bathymetry.center, info.rho_c, info.Sx[:, 3], info.Sy[:, 3],
                   new, U_new, Bc)
    U_new[:, 3] = np.maximum(U_new[:, 3], 0.0)
    return AdaptResult(new_disc, U_new, seeds, True)


def initial_grid(domain, base_shape, max_level: int, model: Model, criteria: SeedCriteria,
                 initial: tuple[Callable, Callable, Callable, Callable], active=None,
                 n_sub: int = 4) -> tuple[Discretization, np.ndarray]:
    """Refine around the initial data until the grid stops changing.

    Each pass samples the initial condition on the current grid and seeds every
    leaf whose largest one-sided difference quotient reaches a threshold; the
    limited slope would miss jumps that sit exactly on a face.
    """
    grid = build_grid(domain, base_shape, max_level, active=active)
    for _ in range(max_level + 1):
        disc = Discretization.build(grid, model)
        U = cell_averages(disc, *initial, n_sub=n_sub)
        _, info = reconstruct_face_states(disc, U)
        ghosts = [ghost_averages(disc.boundaries[a], info.P, disc.bathymetry.center) for a in (0, 1)]
        gx, gy = max_differences(disc, info.P, ghosts)
        hit = criteria.flags(gx, gy)
        seeds = np.column_stack([grid.xc[hit], grid.yc[hit]])
        new = build_grid(domain, base_shape, max_level, seeds=seeds, active=active)
        if new.same_leaves(grid):
            return disc, U
        grid = new
    disc = Discretization.build(grid, model)
    return disc, cell_averages(disc, *initial, n_sub=n_sub)
