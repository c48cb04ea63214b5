import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vdswe.grid import build_grid
from vdswe.scheme import Discretization, Model

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def hump(x, y):
    return 0.8 * np.exp(-5 * (x - 0.9) ** 2 - 50 * (y - 0.5) ** 2)


def flat(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def raster_levels(grid):
    """Leaf level painted onto the finest-level pixel raster; 0 where uncovered."""
    m = grid.max_level
    nxf, nyf = grid.shape_at(m)
    img = np.zeros((nxf, nyf), dtype=int)
    cover = np.zeros((nxf, nyf), dtype=int)
    fi, fj, s = grid.fine_anchor()
    for a, b, w, lev in zip(fi, fj, s, grid.level):
        img[a:a + w, b:b + w] = lev
        cover[a:a + w, b:b + w] += 1
    return img, cover


def fig2_grid():
    """Coarse leaf whose west face is shared with two finer leaves."""
    return build_grid((0.0, 2.0, 0.0, 1.0), (2, 1), 2, seeds=[(0.5, 0.5)])


@pytest.fixture
def hump_model():
    return Model(hump)


@pytest.fixture
def hanging_disc(hump_model):
    grid = build_grid((0.0, 2.0, 0.0, 1.0), (8, 4), 4, seeds=[(0.9, 0.5), (0.3, 0.2)])
    return Discretization.build(grid, hump_model)


def lake_state(disc, w=1.0, rho=997.0):
    h = np.maximum(w - disc.bathymetry.center, 0.0)
    n = disc.grid.n_leaves
    return np.column_stack([disc.bathymetry.center + h, np.zeros(n), np.zeros(n), h * rho])


def random_state(disc, rng, dry_fraction=0.2, rho=(990.0, 1010.0)):
    """Random admissible averages: depths in [0, 1) with some exactly dry leaves."""
    n = disc.grid.n_leaves
    h = rng.uniform(0.0, 1.0, n)
    h[rng.random(n) < dry_fraction] = 0.0
    u = rng.uniform(-1.0, 1.0, n)
    v = rng.uniform(-1.0, 1.0, n)
    r = rng.uniform(*rho, n)
    return np.column_stack([disc.bathymetry.center + h, h * u, h * v, h * r])


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def report(label: str, ok: bool, detail: str) -> bool:
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
