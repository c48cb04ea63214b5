"""Central-upwind finite volumes for variable-density shallow water on adaptive quadtrees."""
from .adaptivity import SeedCriteria, adapt, flag_seed_points, initial_grid, project_solution
from .bathymetry import Bathymetry, build_bathymetry
from .boundary import BoundarySpec, Dirichlet, Extrapolation, Inflow, SolidWall
from .grid import QuadtreeGrid, build_grid, face_segments, regularize
from .reconstruction import PositivityError, reconstruct_face_states
from .scheme import Discretization, Model, cell_averages, evaluate_rhs
from .simulation import SimConfig, preset, run, write_snapshot
from .time_integrator import TimeState, compute_dt, euler_step, ssp_rk3_step

__all__ = [
    "Bathymetry", "BoundarySpec", "Dirichlet", "Discretization", "Extrapolation", "Inflow",
    "Model", "PositivityError", "QuadtreeGrid", "SeedCriteria", "SimConfig", "SolidWall",
    "TimeState", "adapt", "build_bathymetry", "build_grid", "cell_averages", "compute_dt",
    "euler_step", "evaluate_rhs", "face_segments", "flag_seed_points", "initial_grid",
    "preset", "project_solution", "reconstruct_face_states", "regularize", "run",
    "ssp_rk3_step", "write_snapshot",
]
