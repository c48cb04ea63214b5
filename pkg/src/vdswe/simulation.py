"""Run configuration, benchmark presets, diagnostics, snapshots and the time loop."""
from __future__ import annotations

import configparser
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .adaptivity import SeedCriteria, adapt, initial_grid
from .boundary import BoundarySpec, Dirichlet, Extrapolation, Inflow, SolidWall
from .grid import QuadtreeGrid
from .reconstruction import PositivityError
from .scheme import NON_WELL_BALANCED, WELL_BALANCED, Discretization, Model, evaluate_rhs
from .time_integrator import INTEGRATORS, TimeState, step

log = logging.getLogger("vdswe")

# names usable inside field expressions, besides x and y
_EXPR_NAMES = {name: getattr(np, name) for name in (
    "exp", "sqrt", "sin", "cos", "tanh", "abs", "where", "minimum", "maximum", "pi",
    "logical_and", "logical_or", "logical_not", "hypot")}


def compile_field(expr: str):
    """Vectorised f(x, y) from a numpy expression in ``x`` and ``y``."""
    code = compile(expr, f"<field {expr!r}>", "eval")
    for name in code.co_names:
        if name not in _EXPR_NAMES and name not in ("x", "y"):
            raise ValueError(f"unknown name {name!r} in field expression {expr!r}")

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        val = eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, "x": x, "y": y})
        return np.broadcast_to(np.asarray(val, dtype=float), np.broadcast(x, y).shape)

    f.expr = expr
    return f


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce a run; field entries are expressions in x, y."""

    name: str
    domain: tuple[float, float, float, float]
    base_shape: tuple[int, int]
    max_level: int
    t_final: float
    bottom: str = "0"
    w: str = "1"
    u: str = "0"
    v: str = "0"
    rho: str = "997"
    active: str | None = None
    c_w: float = math.inf
    c_rho: float = math.inf
    g: float = 1.0
    rho0: float = 997.0
    integrator: str = "rk3"
    source_mode: str = WELL_BALANCED
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    snapshots: tuple[float, ...] = ()
    out_dir: str | None = None
    n_sub: int = 4
    symmetry_check: bool = False
    max_steps: int | None = None

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.max_level < 1:
            raise ValueError("max_level must be at least 1")
        if not (self.c_w >= 0 and self.c_rho >= 0):
            raise ValueError("seed thresholds must be nonnegative")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.source_mode not in (WELL_BALANCED, NON_WELL_BALANCED):
            raise ValueError(f"unknown source mode {self.source_mode!r}")
        if any(not (0 <= s <= self.t_final) for s in self.snapshots):
            raise ValueError("snapshot times must lie in [0, t_final]")

    def model(self) -> Model:
        return Model(compile_field(self.bottom), self.boundary, self.g, self.rho0, self.source_mode)

    def criteria(self) -> SeedCriteria:
        return SeedCriteria(self.c_w, self.c_rho)

    def initial(self):
        return tuple(compile_field(e) for e in (self.w, self.u, self.v, self.rho))

    def active_mask(self) -> np.ndarray | None:
        if self.active is None:
            return None
        nx, ny = self.base_shape
        x0, x1, y0, y1 = self.domain
        xc = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
        yc = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        return compile_field(self.active)(X, Y) != 0

    def with_overrides(self, **kw) -> "SimConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# -- presets ---------------------------------------------------------------

HUMP = "0.8*exp(-5*(x-0.9)**2 - 50*(y-0.5)**2)"


def preset(example: int | str) -> SimConfig:
    """Benchmark configurations: 1-4 and the lake at rest over the hump ("lake")."""
    if example in (1, "1"):
        return SimConfig(
            name="circular-dam-break", domain=(0.0, 40.0, 0.0, 40.0), base_shape=(16, 16),
            max_level=9, t_final=4.0, w="where((x-20)**2 + (y-20)**2 < 2.5**2, 2.0, 1.0)",
            c_w=5e-4, snapshots=(0.0, 1.0, 2.0, 3.0, 4.0), symmetry_check=True)
    if example in (2, "2"):
        return SimConfig(
            name="density-dam-break-hump", domain=(0.0, 2.0, 0.0, 1.0), base_shape=(16, 8),
            max_level=8, t_final=0.8, bottom=HUMP, rho="where(x < 1, 997.0, 1200.0)",
            c_w=1e-2, c_rho=10.0,
            boundary=BoundarySpec(west=Dirichlet(1.0, 0.0, 0.0, 997.0),
                                  east=Dirichlet(1.0, 0.0, 0.0, 1200.0)),
            snapshots=(0.0, 0.2, 0.4, 0.6, 0.8))
    if example in (3, "3"):
        return SimConfig(
            name="small-perturbation", domain=(-2.0, 2.0, 0.0, 1.0), base_shape=(32, 8),
            max_level=9, t_final=1.8, bottom=HUMP,
            w="where((x > 0.05) & (x < 0.15), 1.01, 1.0)",
            rho="where((x > 0.05) & (x < 0.15), 1007.0, 997.0)",
            c_w=1e-2, c_rho=10.0,
            boundary=BoundarySpec(west=Dirichlet(1.0, 0.0, 0.0, 997.0),
                                  east=Dirichlet(1.0, 0.0, 0.0, 997.0)),
            snapshots=(0.0, 0.6, 0.9, 1.2, 1.8))
    if example in (4, "4"):
        return SimConfig(
            name="sudden-contraction", domain=(0.0, 3.0, 0.0, 1.0), base_shape=(30, 10),
            max_level=8, t_final=1.9, bottom=HUMP,
            active="logical_not((x > 1) & ((y < 0.1) | (y > 0.9)))",
            c_w=2.0, c_rho=20.0,
            boundary=BoundarySpec(west=Inflow(u=2.0, rho=1007.0, w=1.0, lo=0.4, hi=0.6),
                                  east=Extrapolation()),
            snapshots=(0.0, 0.5, 1.0, 1.5, 1.9))
    if example == "lake":
        return SimConfig(
            name="lake-at-rest", domain=(0.0, 2.0, 0.0, 1.0), base_shape=(16, 8),
            max_level=6, t_final=0.1, bottom=HUMP, c_w=1e-2, c_rho=10.0)
    raise ValueError(f"unknown example {example!r}; choose 1, 2, 3, 4 or 'lake'")


# -- config files ------------------------------------------------------------

def _bc_to_text(bc) -> str:
    if isinstance(bc, SolidWall):
        return "wall"
    if isinstance(bc, Extrapolation):
        return "extrapolate"
    kind = "dirichlet" if isinstance(bc, Dirichlet) else "inflow"
    return " ".join([kind] + [f"{k}={v!r}" for k, v in asdict(bc).items()])


def _bc_from_text(text: str):
    parts = text.split()
    if not parts:
        raise ValueError("empty boundary condition")
    kind, args = parts[0].lower(), {}
    for p in parts[1:]:
        k, _, v = p.partition("=")
        args[k] = float(v)
    if kind == "wall":
        return SolidWall()
    if kind == "extrapolate":
        return Extrapolation()
    if kind == "dirichlet":
        return Dirichlet(**args)
    if kind == "inflow":
        return Inflow(**args)
    raise ValueError(f"unknown boundary condition {kind!r}")


_FLOATS = ("t_final", "c_w", "c_rho", "g", "rho0")
_INTS = ("max_level", "n_sub")
_STRINGS = ("name", "bottom", "w", "u", "v", "rho", "integrator", "source_mode")


def config_to_ini(cfg: SimConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp["run"] = {
        "name": cfg.name,
        "domain": " ".join(repr(v) for v in cfg.domain),
        "base_shape": " ".join(str(v) for v in cfg.base_shape),
        "max_level": str(cfg.max_level),
        "t_final": repr(cfg.t_final),
        "integrator": cfg.integrator,
        "source_mode": cfg.source_mode,
        "g": repr(cfg.g),
        "rho0": repr(cfg.rho0),
        "n_sub": str(cfg.n_sub),
        "symmetry_check": str(cfg.symmetry_check).lower(),
    }
    cp["refinement"] = {"c_w": repr(cfg.c_w), "c_rho": repr(cfg.c_rho)}
    fields = {"bottom": cfg.bottom, "w": cfg.w, "u": cfg.u, "v": cfg.v, "rho": cfg.rho}
    if cfg.active is not None:
        fields["active"] = cfg.active
    cp["fields"] = fields
    cp["boundary"] = {side: _bc_to_text(getattr(cfg.boundary, side))
                      for side in ("west", "east", "south", "north")}
    cp["output"] = {"snapshots": " ".join(repr(t) for t in cfg.snapshots)}
    if cfg.out_dir is not None:
        cp["output"]["out_dir"] = cfg.out_dir
    lines = []

    class _Sink:
        def write(self, s):
            lines.append(s)

    cp.write(_Sink())
    return "".join(lines)


def config_from_ini(text: str) -> SimConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.read_string(text)
    kw = {}
    for section in cp.sections():
        for key, val in cp[section].items():
            if section == "boundary":
                continue
            kw[key] = val
    if "boundary" in cp:
        sides = {}
        for side in ("west", "east", "south", "north"):
            if side not in cp["boundary"]:
                raise ValueError(f"boundary side {side!r} is not specified")
            sides[side] = _bc_from_text(cp["boundary"][side])
        kw["boundary"] = BoundarySpec(**sides)
    for key in _FLOATS:
        if key in kw:
            kw[key] = float(kw[key])
    for key in _INTS:
        if key in kw:
            kw[key] = int(kw[key])
    if "domain" in kw:
        kw["domain"] = tuple(float(v) for v in kw["domain"].split())
    if "base_shape" in kw:
        kw["base_shape"] = tuple(int(v) for v in kw["base_shape"].split())
    if "snapshots" in kw:
        kw["snapshots"] = tuple(float(v) for v in kw["snapshots"].replace(",", " ").split())
    if "symmetry_check" in kw:
        kw["symmetry_check"] = kw["symmetry_check"].lower() in ("1", "true", "yes")
    if "max_steps" in kw:
        kw["max_steps"] = int(kw["max_steps"])
    known = set(SimConfig.__dataclass_fields__)
    unknown = set(kw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return SimConfig(**kw)


# -- diagnostics -------------------------------------------------------------

def total_volume(disc: Discretization, U: np.ndarray) -> float:
    return float(np.sum(disc.grid.area * (U[:, 0] - disc.bathymetry.center)))


def total_mass(disc: Discretization, U: np.ndarray) -> float:
    return float(np.sum(disc.grid.area * U[:, 3]))


def symmetry_error(grid: QuadtreeGrid, values: np.ndarray) -> float:
    """Largest mismatch of ``values`` under x<->y swap and both mid-line reflections.

    Returns inf when the grid itself is not symmetric.
    """
    nx, ny = grid.base_shape
    nxl = np.left_shift(nx, grid.level - 1)
    nyl = np.left_shift(ny, grid.level - 1)
    maps = [(grid.level, nxl - 1 - grid.i, grid.j), (grid.level, grid.i, nyl - 1 - grid.j)]
    x0, x1, y0, y1 = grid.domain
    if nx == ny and (x1 - x0) == (y1 - y0):
        maps.append((grid.level, grid.j, grid.i))
    err = 0.0
    for lev, i, j in maps:
        k = grid.find(lev, i, j)
        if np.any(k < 0):
            return math.inf
        err = max(err, float(np.max(np.abs(values - values[k]))))
    return err


@dataclass
class Diagnostics:
    step: int
    t: float
    dt: float
    leaves: int
    min_h: float
    min_rho: float
    volume: float
    mass: float
    symmetry: float | None = None

    def line(self) -> str:
        s = (f"step={self.step} t={self.t:.6g} dt={self.dt:.6g} leaves={self.leaves} "
             f"minh={self.min_h:.6g} minrho={self.min_rho:.6g} vol={self.volume:.15g} "
             f"mass={self.mass:.15g}")
        if self.symmetry is not None:
            s += f" sym={self.symmetry:.3g}"
        return s


# -- snapshots -----------------------------------------------------------------

FIELD_COLUMNS = ("cx", "cy", "dx", "dy", "level", "w", "hu", "hv", "hrho", "h", "rho", "B")


def field_table(disc: Discretization, U: np.ndarray) -> str:
    g = disc.grid
    Bc = disc.bathymetry.center
    h = np.maximum(U[:, 0] - Bc, 0.0)
    rho = np.where(h > 0, U[:, 3] / np.where(h > 0, h, 1.0), 0.0)
    rows = [",".join(FIELD_COLUMNS)]
    for k in range(g.n_leaves):
        vals = (g.xc[k], g.yc[k], g.dx[k], g.dy[k])
        rest = (U[k, 0], U[k, 1], U[k, 2], U[k, 3], h[k], rho[k], Bc[k])
        rows.append(",".join([*(repr(float(v)) for v in vals), str(int(g.level[k])),
                              *(repr(float(v)) for v in rest)]))
    return "\n".join(rows) + "\n"


def write_snapshot(disc: Discretization, U: np.ndarray, path: str | Path, tag: str) -> list[Path]:
    """Write ``<tag>_grid.txt`` and ``<tag>_fields.csv`` into directory ``path``."""
    if disc.grid.n_leaves == 0:
        raise ValueError("cannot write a snapshot of an empty grid")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        grid_file = out / f"{tag}_grid.txt"
        grid_file.write_text(disc.grid.dump(disc.bathymetry.center))
        field_file = out / f"{tag}_fields.csv"
        field_file.write_text(field_table(disc, U))
    except OSError as exc:
        raise OSError(f"cannot write snapshot to {out}: {exc}") from exc
    return [grid_file, field_file]


# -- time loop -----------------------------------------------------------------

@dataclass
class RunResult:
    config: SimConfig
    disc: Discretization
    U: np.ndarray
    t: float
    steps: int
    history: list[Diagnostics]
    summary: dict
    snapshots: dict = field(default_factory=dict)


def _summary(history: list[Diagnostics]) -> dict:
    vol0, mass0 = history[0].volume, history[0].mass
    sym = [d.symmetry for d in history if d.symmetry is not None]
    return {
        "steps": history[-1].step,
        "t": history[-1].t,
        "min_leaves": min(d.leaves for d in history),
        "max_leaves": max(d.leaves for d in history),
        "min_h": min(d.min_h for d in history),
        "min_rho": min(d.min_rho for d in history),
        "volume_drift": abs(history[-1].volume - vol0) / max(abs(vol0), 1e-300),
        "mass_drift": abs(history[-1].mass - mass0) / max(abs(mass0), 1e-300),
        "max_symmetry_error": max(sym) if sym else None,
    }


def run(cfg: SimConfig, keep_snapshots: bool = False) -> RunResult:
    """Integrate ``cfg`` to ``t_final``, adapting the grid after every step.

    Raises PositivityError on a depth or density breach; when ``out_dir`` is set
    the offending state is dumped there first.
    """
    model = cfg.model()
    criteria = cfg.criteria()
    disc, U = initial_grid(cfg.domain, cfg.base_shape, cfg.max_level, model, criteria,
                           cfg.initial(), active=cfg.active_mask(), n_sub=cfg.n_sub)
    fallback = 1e-3 * cfg.t_final
    clock = TimeState()
    history: list[Diagnostics] = []
    snaps = {}
    stops = sorted(set(cfg.snapshots) | {cfg.t_final})
    pending = [s for s in stops if s > 0]

    def record(r=None):
        # reconstructed extremes come from the first stage of the step just taken
        if r is None:
            r = evaluate_rhs(disc, U, model, clock.t)
        d = Diagnostics(clock.n, clock.t, clock.dt, disc.grid.n_leaves, r.min_h, r.min_rho,
                        total_volume(disc, U), total_mass(disc, U),
                        symmetry_error(disc.grid, U[:, 0]) if cfg.symmetry_check else None)
        history.append(d)
        log.info(d.line())
        return d

    def snapshot():
        tag = f"t{clock.t:.4f}".replace(".", "p")
        if cfg.out_dir is not None:
            write_snapshot(disc, U, cfg.out_dir, tag)
        if keep_snapshots:
            snaps[clock.t] = (disc, U.copy())

    recon = None
    record()
    if 0.0 in cfg.snapshots:
        snapshot()
    try:
        while pending:
            if cfg.max_steps is not None and clock.n >= cfg.max_steps:
                break
            target = pending[0]
            U, clock, first = step(disc, U, model, clock, target, cfg.integrator, fallback,
                                   recon=recon)
            if target - clock.t <= 1e-12 * max(1.0, target):
                clock = TimeState(target, clock.n, clock.dt)
                pending.pop(0)
                hit = True
            else:
                hit = False
            res = adapt(disc, U, model, criteria, t=clock.t)
            disc, U, recon = res.disc, res.U, res.recon
            record(first)
            if hit and clock.t in cfg.snapshots:
                snapshot()
    except PositivityError:
        if cfg.out_dir is not None:
            write_snapshot(disc, U, cfg.out_dir, "failure")
        raise
    summary = _summary(history)
    if cfg.out_dir is not None:
        write_snapshot(disc, U, cfg.out_dir, "final")
        manifest = {"config": json.loads(json.dumps(asdict(cfg), default=str)),
                    "summary": summary, "log": [d.line() for d in history]}
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out_dir) / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str))
    return RunResult(cfg, disc, U, clock.t, clock.n, history, summary, snaps)
