"""Central-upwind fluxes, source-term quadratures and the semi-discrete right-hand side."""
from __future__ import annotations

import numpy as np

from .reconstruction import SideStates

DEGENERATE_SPEED = 1e-14


def local_speeds(axis: int, minus: SideStates, plus: SideStates, g: float, rho0: float):
    """One-sided speeds (a_plus >= 0 >= a_minus) from both sides' point values."""
    if np.any(minus.h < 0) or np.any(plus.h < 0) or np.any(minus.rho < 0) or np.any(plus.rho < 0):
        raise ValueError("negative depth or density in face states")
    un_m = minus.u if axis == 0 else minus.v
    un_p = plus.u if axis == 0 else plus.v
    c_m = np.sqrt(g / rho0 * minus.h * minus.rho)
    c_p = np.sqrt(g / rho0 * plus.h * plus.rho)
    zero = np.zeros_like(un_m)
    a_plus = np.maximum(np.maximum(un_p + c_p, un_m + c_m), zero)
    a_minus = np.minimum(np.minimum(un_p - c_p, un_m - c_m), zero)
    return a_plus, a_minus


def conserved(side: SideStates) -> np.ndarray:
    """(w, hu, hv, h*rho) rebuilt from the desingularized point values."""
    return np.column_stack([side.w, side.hu, side.hv, side.hrho])


def physical_flux(axis: int, side: SideStates, g: float, rho0: float) -> np.ndarray:
    """F (axis 0) or G (axis 1) evaluated with desingularized velocities."""
    hu, hv = side.hu, side.hv
    pressure = g / (2.0 * rho0) * side.rho * side.h ** 2
    if axis == 0:
        return np.column_stack([hu, hu * side.u + pressure, hu * side.v, hu * side.rho])
    return np.column_stack([hv, hv * side.u, hv * side.v + pressure, hv * side.rho])


def cu_flux(axis: int, minus: SideStates, plus: SideStates, g: float, rho0: float,
            speeds=None) -> np.ndarray:
    """Central-upwind numerical flux, shape (segments, 4)."""
    if speeds is None:
        speeds = local_speeds(axis, minus, plus, g, rho0)
    ap, am = speeds
    F_m = physical_flux(axis, minus, g, rho0)
    F_p = physical_flux(axis, plus, g, rho0)
    U_m = conserved(minus)
    U_p = conserved(plus)
    denom = ap - am
    ok = denom > DEGENERATE_SPEED
    safe = np.where(ok, denom, 1.0)[:, None]
    H = (ap[:, None] * F_m - am[:, None] * F_p) / safe + (ap * am)[:, None] / safe * (U_p - U_m)
    if not ok.all():
        H[~ok] = 0.5 * (F_m[~ok] + F_p[~ok])
    return H


def assemble_rhs(grid, segments, fluxes, source: np.ndarray | None = None) -> np.ndarray:
    """-(1/|C|) * sum of signed segment-length-weighted fluxes, plus the source."""
    n = grid.n_leaves
    rhs = np.zeros((n, 4))
    for segs, H in zip(segments, fluxes):
        lo, hi = segs.lo, segs.hi
        ml, mh = lo >= 0, hi >= 0
        cells = np.concatenate([lo[ml], hi[mh]])
        w = np.concatenate([-segs.length[ml] / grid.area[lo[ml]],
                            segs.length[mh] / grid.area[hi[mh]]])
        Hc = np.concatenate([H[ml], H[mh]])
        for comp in range(4):
            rhs[:, comp] += np.bincount(cells, weights=w * Hc[:, comp], minlength=n)
    if source is not None:
        rhs += source
    return rhs


def source_wb(disc, info, g: float, rho0: float) -> np.ndarray:
    """Well-balanced cell averages (0, S2, S3, 0) of the bottom-slope source.

    Per axis: g/(2 rho0 dx) * [sum over high-side segments of frac * rho (w-B)^2
    - same over low-side segments] - g/rho0 * rho_c * w_x * (wbar - B_c),
    with frac the segment's share of its face.
    """
    grid = disc.grid
    fp = disc.points
    n = grid.n_leaves
    S = np.zeros((n, 4))
    pressure = fp.sign * fp.frac * info.rho_points * info.h_points ** 2
    corr = info.correction
    for axis, size, slope in ((0, grid.dx, corr.wx), (1, grid.dy, corr.wy)):
        sel = fp.axis == axis
        acc = np.bincount(fp.cell[sel], weights=pressure[sel], minlength=n)
        S[:, 1 + axis] = (g / (2.0 * rho0 * size) * acc
                          - g / rho0 * info.rho_c * slope * info.h_bar)
    return S


def source_nwb(grid, U: np.ndarray, corners: np.ndarray, g: float, rho0: float) -> np.ndarray:
    """Non-well-balanced source: -g (h rho) / rho0 times corner-difference slopes of B."""
    sw, se, nw, ne = corners.T
    hr = U[:, 3]
    S = np.zeros((grid.n_leaves, 4))
    S[:, 1] = -g * hr / (rho0 * grid.dx) * (0.5 * (ne + se) - 0.5 * (nw + sw))
    S[:, 2] = -g * hr / (rho0 * grid.dy) * (0.5 * (nw + ne) - 0.5 * (sw + se))
    return S
