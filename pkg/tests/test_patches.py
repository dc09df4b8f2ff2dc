import numpy as np
import pytest

from delone_rectify.errors import BallOutsideWindow, WindowTooSmall
from delone_rectify.generators import GeneratorSpec, generate
from delone_rectify.geometry import Window, build_point_set, lattice_points
from delone_rectify.patches import find_translated_copy, patch_at, repetitivity_profile


def lattice_set(extent=8):
    w = Window([0, 0], [extent, extent])
    return build_point_set(lattice_points(w), w)


def test_patch_at_lattice_ball():
    s = lattice_set()
    p = patch_at(s, (4, 4), 1.0)
    got = {tuple(o) for o in p.offsets}
    assert got == {(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)}


def test_patch_at_single_offset():
    s = lattice_set()
    p = patch_at(s, (4, 4), 0.5)
    assert len(p) == 1 and tuple(p.offsets[0]) == (0.0, 0.0)


def test_patch_at_requires_ball_inside():
    s = lattice_set()
    with pytest.raises(BallOutsideWindow):
        patch_at(s, (0.5, 0.5), 1.0)


def test_patch_at_chair_matches_linear_scan():
    spec = GeneratorSpec(kind="chair_vertices", dim=2, window=Window([0, 0], [32, 32]), iterations=5)
    s, _ = generate(spec)
    center = np.array([9.0, 9.0])
    p = patch_at(s, center, 2.0)
    # oracle: plain linear scan
    want = {
        tuple(q - center)
        for q in s.points
        if np.linalg.norm(q - center) <= 2.0
    }
    assert {tuple(o) for o in p.offsets} == want


def test_find_translated_copy_self():
    s = lattice_set()
    p = patch_at(s, (4, 4), 1.5)
    t = find_translated_copy(s, p, (4, 4), 2.0, tol=1e-9)
    assert t is not None and np.allclose(t, [4, 4], atol=1e-12)


def test_find_translated_copy_lattice_elsewhere():
    s = lattice_set(12)
    p = patch_at(s, (3, 3), 1.2)
    t = find_translated_copy(s, p, (8, 8), 3.0, tol=1e-9)
    assert t is not None
    # verify the stated two-sided containment with a linear scan
    for o in p.offsets:
        d = np.linalg.norm(s.points - (t + o), axis=1)
        assert d.min() <= 1e-9
    inside = np.linalg.norm(s.points - t, axis=1) <= p.radius - 1e-9
    assert int(inside.sum()) == len(p)


def test_find_translated_copy_chair():
    spec = GeneratorSpec(kind="chair_vertices", dim=2, window=Window([0, 0], [64, 64]), iterations=6)
    s, _ = generate(spec)
    p = patch_at(s, (10.0, 10.0), 2.0)
    t = find_translated_copy(s, p, (40.0, 40.0), 20.0, tol=1e-9)
    assert t is not None
    for o in p.offsets:
        d = np.linalg.norm(s.points - (t + o), axis=1)
        assert d.min() <= 1e-9


def test_find_translated_copy_none_when_absent():
    # a defect breaks exact recurrence of the patch containing it
    w = Window([0, 0], [12, 12])
    pts = lattice_points(w).tolist()
    pts.append([5.5, 5.5])
    s = build_point_set(pts, w)
    p = patch_at(s, (5.5, 5.5), 1.0)  # contains the defect point
    t = find_translated_copy(s, p, (2.5, 2.5), 2.0, tol=1e-9)
    assert t is None


def test_repetitivity_profile_lattice():
    s = lattice_set(12)
    entries = repetitivity_profile(s, [1.0], tol=1e-9)
    assert entries[0].r_est == 2.0  # first schedule entry


def test_repetitivity_profile_perturbed_lattice_fails():
    spec = GeneratorSpec(
        kind="perturbed_lattice", dim=2, window=Window([0, 0], [16, 16]), delta=0.3, seed=9
    )
    s, _ = generate(spec)
    entries = repetitivity_profile(s, [2.0], tol=1e-9)
    assert entries[0].r_est is None  # continuous noise: exact recurrence fails


def test_repetitivity_profile_window_too_small():
    s = lattice_set(4)
    with pytest.raises(WindowTooSmall):
        repetitivity_profile(s, [2.0], tol=1e-9)
