"""Forward Euler and SSP-RK3 time stepping on a frozen grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reconstruction import PositivityError, cached_groups
from .scheme import Discretization, Model, RhsResult, evaluate_rhs

CFL = 0.125
POSITIVITY_SLACK = 1e-14


@dataclass(frozen=True)
class TimeState:
    """Clock of a run; ``lam``/``mu`` give the per-leaf ratios dt/dx and dt/dy."""

    t: float = 0.0
    n: int = 0
    dt: float = 0.0

    def lam(self, grid) -> np.ndarray:
        return self.dt / grid.dx

    def mu(self, grid) -> np.ndarray:
        return self.dt / grid.dy

    def advance(self, dt: float) -> "TimeState":
        if not dt > 0:
            raise ValueError(f"time step must be positive, got {dt}")
        return TimeState(self.t + dt, self.n + 1, dt)


def cell_max_speeds(grid, segments, speeds, disc=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-leaf maximum of max(a+, -a-) over the leaf's own segments, per axis."""
    n = grid.n_leaves
    out = []
    for segs, (ap, am) in zip(segments, speeds):
        s = np.maximum(ap, -am)
        ml, mh = segs.lo >= 0, segs.hi >= 0
        cells = np.concatenate([segs.lo[ml], segs.hi[mh]])
        groups = cached_groups(disc, ("speeds", segs.axis), cells, n)
        out.append(groups.reduce(np.maximum, np.concatenate([s[ml], s[mh]]), 0.0))
    return out[0], out[1]


def compute_dt(grid, speeds_x: np.ndarray, speeds_y: np.ndarray, cfl: float = CFL,
               fallback: float = np.inf, t: float | None = None,
               t_stop: float | None = None) -> float:
    """CFL-limited step from per-leaf maximal speeds, capped at ``t_stop - t``.

    ``fallback`` is used when no leaf carries a nonzero speed.
    """
    bounds = []
    for size, sp in ((grid.dx, speeds_x), (grid.dy, speeds_y)):
        pos = sp > 0
        if pos.any():
            bounds.append(np.min(size[pos] / sp[pos]))
    dt = cfl * min(bounds) if bounds else fallback
    if t is not None and t_stop is not None:
        dt = min(dt, t_stop - t)
    if not (dt > 0 and np.isfinite(dt)):
        raise ValueError(f"no usable time step (dt={dt})")
    return float(dt)


def check_positivity(disc: Discretization, U: np.ndarray, t: float | None = None,
                     slack: float = POSITIVITY_SLACK) -> None:
    h = U[:, 0] - disc.bathymetry.center
    for vals, name in ((h, "depth"), (U[:, 3], "h*rho")):
        k = int(np.argmin(vals))
        if vals[k] < -slack:
            raise PositivityError(
                f"negative {name} {vals[k]:.3e} in leaf {k} at "
                f"({disc.grid.xc[k]:.6g}, {disc.grid.yc[k]:.6g})"
                + ("" if t is None else f", t={t}"), cell=k, t=t)


def _clip(disc: Discretization, U: np.ndarray) -> np.ndarray:
    # rounding-level negatives are removed once the slack check has passed
    U[:, 0] = np.maximum(U[:, 0], disc.bathymetry.center)
    U[:, 3] = np.maximum(U[:, 3], 0.0)
    return U


def euler_step(disc: Discretization, U: np.ndarray, model: Model, dt: float,
               t: float | None = None, first: RhsResult | None = None) -> np.ndarray:
    r = first if first is not None else evaluate_rhs(disc, U, model, t)
    U1 = U + dt * r.rhs
    check_positivity(disc, U1, t)
    return _clip(disc, U1)


def ssp_rk3_step(disc: Discretization, U: np.ndarray, model: Model, dt: float,
                 t: float | None = None, first: RhsResult | None = None) -> np.ndarray:
    r = first if first is not None else evaluate_rhs(disc, U, model, t)
    U1 = _clip(disc, _checked(disc, U + dt * r.rhs, t))
    L1 = evaluate_rhs(disc, U1, model, t).rhs
    U2 = _clip(disc, _checked(disc, 0.75 * U + 0.25 * (U1 + dt * L1), t))
    L2 = evaluate_rhs(disc, U2, model, t).rhs
    return _clip(disc, _checked(disc, U / 3.0 + 2.0 / 3.0 * (U2 + dt * L2), t))


def _checked(disc, U, t):
    check_positivity(disc, U, t)
    return U


INTEGRATORS = {"euler": euler_step, "rk3": ssp_rk3_step}


def step(disc: Discretization, U: np.ndarray, model: Model, clock: TimeState,
         t_stop: float, integrator: str = "rk3", fallback: float = np.inf,
         cfl: float = CFL, recon=None) -> tuple[np.ndarray, TimeState, RhsResult]:
    """One CFL-limited step; returns the new state, clock and the first-stage RHS."""
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}")
    r = evaluate_rhs(disc, U, model, clock.t, recon=recon)
    sx, sy = cell_max_speeds(disc.grid, disc.segments, r.speeds, disc)
    dt = compute_dt(disc.grid, sx, sy, cfl=cfl, fallback=fallback, t=clock.t, t_stop=t_stop)
    U_new = INTEGRATORS[integrator](disc, U, model, dt, t=clock.t, first=r)
    return U_new, clock.advance(dt), r
