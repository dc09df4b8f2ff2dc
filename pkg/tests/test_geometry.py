import math

import numpy as np
import pytest

from delone_rectify.errors import (
    DegenerateWindow,
    DimensionMismatch,
    DuplicatePoint,
    EmptySet,
    PointOutsideWindow,
)
from delone_rectify.generators import fibonacci_projection
from delone_rectify.geometry import (
    GridIndex,
    Window,
    build_point_set,
    delone_constants,
    lattice_points,
    min_pairwise_distance,
)


def test_window_basics():
    w = Window([0, 0], [2, 3])
    assert w.dim == 2
    assert np.allclose(w.extent, [2, 3])
    mask = w.contains(np.array([[0.0, 0.0], [2.0, 1.0], [1.9, 2.9]]))
    assert mask.tolist() == [True, False, True]  # half-open upper edge


def test_window_requires_lower_below_upper():
    with pytest.raises(DegenerateWindow):
        Window([0, 0], [0, 1])


def test_build_point_set_examples():
    w = Window([0, 0], [2, 2])
    s = build_point_set([[0, 0], [1, 0]], w)
    assert len(s) == 2

    with pytest.raises(DuplicatePoint):
        build_point_set([[0, 0], [0, 0]], w)
    with pytest.raises(PointOutsideWindow):
        build_point_set([[3, 3]], Window([0, 0], [2, 2]))
    with pytest.raises(DimensionMismatch):
        build_point_set([[0, 0, 0]], w)


def test_grid_index_matches_linear_scan():
    rng = np.random.default_rng(42)
    pts = rng.uniform(0, 10, size=(300, 2))
    index = GridIndex(pts, cell_size=0.7)
    for _ in range(100):
        center = rng.uniform(-1, 11, size=2)
        r = rng.uniform(0, 3)
        got = index.query_ball(center, r)
        want = np.nonzero(np.linalg.norm(pts - center, axis=1) <= r)[0]
        assert np.array_equal(got, want)


def test_grid_index_3d_and_edge_radii():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 4, size=(150, 3))
    index = GridIndex(pts, cell_size=1.0)
    for r in (0.0, 1e-12, 2.5):
        center = pts[7]
        got = index.query_ball(center, r)
        want = np.nonzero(np.linalg.norm(pts - center, axis=1) <= r)[0]
        assert np.array_equal(got, want)


def test_delone_constants_lattice():
    w = Window([0, 0], [8, 8])
    s = build_point_set(lattice_points(w), w)
    dc = delone_constants(s, margin=1.0)
    assert dc.r_sep == 1.0
    assert abs(dc.r_cov - math.sqrt(2) / 2) <= dc.grid_pitch
    assert dc.grid_pitch <= 1.0 / 4 + 1e-12


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_delone_constants_lattice_dims(dim):
    w = Window([0] * dim, [6] * dim)
    s = build_point_set(lattice_points(w), w)
    dc = delone_constants(s, margin=1.0)
    assert dc.r_sep == 1.0
    assert abs(dc.r_cov - math.sqrt(dim) / 2) <= dc.grid_pitch + 1e-9


def test_delone_constants_single_point():
    w = Window([0, 0], [2, 2])
    s = build_point_set([[0.5, 0.5]], w)
    dc = delone_constants(s, margin=0.0)
    assert dc.r_sep is None
    # farthest corner of the window from (0.5, 0.5)
    assert dc.r_cov == pytest.approx(math.hypot(1.5, 1.5), abs=1e-12)


def test_delone_constants_fibonacci_r_sep_matches_gap_scan():
    vals = fibonacci_projection(0.0, 80.0)
    # independent oracle: brute-force scan of consecutive gaps
    brute = np.min(np.diff(np.sort(vals)))
    w = Window([0.0], [80.0])
    s = build_point_set(vals.reshape(-1, 1), w)
    dc = delone_constants(s, margin=1.0)
    assert dc.r_sep == pytest.approx(brute, abs=0)
    assert dc.r_sep == pytest.approx(1.0, abs=1e-9)


def test_delone_constants_errors():
    w = Window([0, 0], [4, 4])
    s = build_point_set([[1, 1]], w)
    with pytest.raises(DegenerateWindow):
        delone_constants(s, margin=2.0)
    empty = build_point_set(np.empty((0, 2)), w)
    with pytest.raises(EmptySet):
        delone_constants(empty, margin=0.5)


def test_min_pairwise_distance():
    assert math.isinf(min_pairwise_distance(np.array([[1.0, 2.0]])))
    pts = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 0.25]])
    assert min_pairwise_distance(pts) == 0.25


def test_lattice_points_half_open():
    w = Window([0, 0], [4, 4])
    assert len(lattice_points(w)) == 16
    w2 = Window([-0.5, -0.5], [0.5, 0.5])
    assert lattice_points(w2).tolist() == [[0.0, 0.0]]
