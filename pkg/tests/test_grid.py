import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fig2_grid, raster_levels
from vdswe.grid import (MASKED, QuadtreeGrid, build_grid, face_segments, leaf_neighbors,
                        parse_grid_dump, regularize)

UNIT = (0.0, 1.0, 0.0, 1.0)


def balanced_by_raster(grid):
    """Brute force: compare levels of every pair of edge- or corner-adjacent pixels."""
    img, _ = raster_levels(grid)
    pad = np.pad(img, 1)
    n, k = img.shape
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        other = pad[1 + di:1 + di + n, 1 + dj:1 + dj + k]
        both = (img > 0) & (other > 0)
        if np.any(np.abs(img - other)[both] > 1):
            return False
    return True


def test_no_seeds_gives_base_grid():
    g = build_grid(UNIT, (2, 2), 3)
    assert g.n_leaves == 4
    assert np.all(g.level == 1)


def test_single_refinement_of_root():
    g = build_grid(UNIT, (1, 1), 2, seeds=[(0.1, 0.1)])
    assert g.n_leaves == 4
    assert np.all(g.level == 2)


def test_seeded_leaves_reach_max_level():
    seeds = np.array([[0.13, 0.71], [0.9, 0.05]])
    g = build_grid(UNIT, (2, 2), 5, seeds=seeds)
    for x, y in seeds:
        assert g.level[g.locate(x, y)] == 5


def test_diagonal_level_gap_is_closed():
    # level-3 leaf in the NE corner of base cell (0, 0) touches base cell (1, 1) diagonally
    g = build_grid(UNIT, (2, 2), 3, seeds=[(0.45, 0.45)])
    assert g.find(1, 1, 1) < 0
    assert g.find(2, 2, 2) >= 0
    assert g.is_regularised()


def test_regularize_is_fixpoint_on_balanced_grid():
    g = build_grid(UNIT, (3, 2), 5, seeds=[(0.2, 0.3), (0.8, 0.8)])
    again = regularize(g)
    assert again.same_leaves(g)


def test_regularize_repairs_unbalanced_leaf_set():
    # base cell 0 split down to level 3 in one corner, neighbors left at level 1
    levels, ii, jj = [1], [1], [0]
    levels += [2, 2, 2]
    ii += [0, 1, 0]
    jj += [1, 0, 0]
    levels += [3, 3, 3, 3]
    ii += [2, 3, 2, 3]
    jj += [2, 2, 3, 3]
    g = QuadtreeGrid.from_leaves((0.0, 2.0, 0.0, 1.0), (2, 1), 3, levels, ii, jj)
    assert not g.is_regularised()
    fixed = regularize(g)
    assert fixed.is_regularised()
    assert balanced_by_raster(fixed)
    # nothing was coarsened
    for lev, i, j in zip(levels, ii, jj):
        if lev == 3:
            assert fixed.find(3, i, j) >= 0


def test_seed_outside_domain_rejected():
    with pytest.raises(ValueError):
        build_grid(UNIT, (2, 2), 3, seeds=[(1.5, 0.5)])


@pytest.mark.parametrize("base, m", [((0, 2), 3), ((2, 2), 0), ((1, 1), 60)])
def test_bad_parameters_rejected(base, m):
    with pytest.raises(ValueError):
        build_grid(UNIT, base, m)


def test_uniform_two_by_two_segment_counts():
    g = build_grid(UNIT, (2, 2), 1)
    sx, sy = face_segments(g)
    assert sx.n_interior + sy.n_interior == 4
    assert sx.n_interior == 2 and sy.n_interior == 2
    assert sx.n_boundary + sy.n_boundary == 8


def test_single_cell_segments():
    g = build_grid(UNIT, (1, 1), 1)
    sx, sy = face_segments(g)
    assert sx.n_interior + sy.n_interior == 0
    assert sx.n_boundary + sy.n_boundary == 4


def test_split_face_gives_two_half_segments():
    g = fig2_grid()
    coarse = int(np.flatnonzero(g.level == 1)[0])
    sx, _ = face_segments(g)
    west = np.flatnonzero(sx.hi == coarse)
    east = np.flatnonzero(sx.lo == coarse)
    assert west.size == 2
    assert np.allclose(sx.length[west], 0.5)
    assert sorted(sx.ym[west]) == [0.25, 0.75]
    assert east.size == 1 and sx.length[east[0]] == 1.0


def test_leaf_neighbors():
    g = fig2_grid()
    coarse = int(np.flatnonzero(g.level == 1)[0])
    west = leaf_neighbors(g, coarse, "west")
    assert len(west) == 2
    assert sorted(g.yc[west]) == [0.25, 0.75]
    assert all(g.xc[k] == 0.75 for k in west)
    assert leaf_neighbors(g, coarse, "east") == []
    fine = g.locate(0.75, 0.25)
    assert leaf_neighbors(g, fine, "east") == [coarse]
    u = build_grid(UNIT, (3, 3), 1)
    mid = u.locate(0.5, 0.5)
    for d in ("west", "east", "south", "north"):
        assert len(leaf_neighbors(u, mid, d)) == 1
    with pytest.raises(ValueError):
        leaf_neighbors(u, mid, "up")


def test_dump_round_trip():
    g = build_grid((0.0, 2.0, 0.0, 1.0), (2, 1), 3, seeds=[(0.3, 0.3)])
    rows = parse_grid_dump(g.dump())
    assert rows.shape == (g.n_leaves, 5)
    assert np.array_equal(rows[:, 0], g.level)
    assert np.array_equal(rows[:, 1], g.xc)
    assert np.array_equal(rows[:, 4], g.dy)


def test_cell_size_halves_per_level():
    g = build_grid((0.0, 3.0, 0.0, 1.0), (3, 1), 4, seeds=[(1.2, 0.4)])
    assert np.all(g.dx * 2.0 ** (g.level - 1) == g.base_dx)
    assert np.all(g.dy * 2.0 ** (g.level - 1) == g.base_dy)


def test_masked_faces_are_tagged():
    active = np.ones((3, 1), dtype=bool)
    active[2, 0] = False
    g = build_grid((0.0, 3.0, 0.0, 1.0), (3, 1), 2, active=active)
    assert g.n_leaves == 2
    sx, _ = face_segments(g)
    assert np.count_nonzero(sx.tag == MASKED) == 1


def test_deterministic():
    seeds = np.random.default_rng(1).uniform(0, 1, (20, 2))
    a = build_grid(UNIT, (2, 3), 5, seeds=seeds)
    b = build_grid(UNIT, (2, 3), 5, seeds=seeds[::-1])
    assert a.dump() == b.dump()


seed_lists = st.lists(st.tuples(st.floats(0, 2), st.floats(0, 1)), max_size=6)


@given(seeds=seed_lists, m=st.integers(1, 5), nx=st.integers(1, 3), ny=st.integers(1, 3))
def test_tiling_balance_and_segments(seeds, m, nx, ny):
    g = build_grid((0.0, 2.0, 0.0, 1.0), (nx, ny), m, seeds=seeds)
    assert abs(g.area.sum() - 2.0) <= 1e-14 * 2.0
    _, cover = raster_levels(g)
    assert np.all(cover == 1)
    assert balanced_by_raster(g)
    assert g.is_regularised()
    for x, y in seeds:
        assert g.level[g.locate(x, y)] == m
    sx, sy = face_segments(g)
    # each leaf face is covered exactly by its segments
    for segs, face_len in ((sx, g.dy), (sy, g.dx)):
        for side in (segs.lo, segs.hi):
            ok = side >= 0
            total = np.bincount(side[ok], weights=segs.length[ok], minlength=g.n_leaves)
            assert np.allclose(total, face_len, rtol=0, atol=1e-15)
    # interior segments are listed once
    for segs in (sx, sy):
        pairs = set()
        inner = segs.interior
        for a, b, xm, ym in zip(segs.lo[inner], segs.hi[inner], segs.xm[inner], segs.ym[inner]):
            key = (int(a), int(b), float(xm), float(ym))
            assert key not in pairs
            pairs.add(key)
