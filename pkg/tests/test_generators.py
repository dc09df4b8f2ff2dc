from fractions import Fraction

import numpy as np
import pytest

from delone_rectify.errors import InvalidSpec
from delone_rectify.generators import (
    PHI,
    GeneratorSpec,
    chair_vertices,
    fibonacci_projection,
    generate,
)
from delone_rectify.geometry import Window, min_pairwise_distance


def test_lattice_count():
    spec = GeneratorSpec(kind="lattice", dim=2, window=Window([0, 0], [4, 4]))
    s, corr = generate(spec)
    assert len(s) == 16 and corr is None


def test_perturbed_zero_delta_is_lattice():
    w = Window([0, 0], [5, 5])
    lat, _ = generate(GeneratorSpec(kind="lattice", dim=2, window=w))
    per, corr = generate(GeneratorSpec(kind="perturbed_lattice", dim=2, window=w, delta=0.0, seed=1))
    assert np.array_equal(lat.points, per.points)
    assert corr is not None and corr.max_displacement == 0.0
    assert np.array_equal(corr.lattice, corr.points)


def test_perturbed_determinism_bit_identical():
    spec = GeneratorSpec(kind="perturbed_lattice", dim=2, window=Window([0, 0], [9, 9]), delta=0.35, seed=77)
    a, ca = generate(spec)
    b, cb = generate(spec)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(ca.points, cb.points)
    other, _ = generate(GeneratorSpec(kind="perturbed_lattice", dim=2, window=Window([0, 0], [9, 9]), delta=0.35, seed=78))
    assert not np.array_equal(a.points, other.points)


def test_perturbed_lattice_invariants():
    delta = 0.35
    spec = GeneratorSpec(kind="perturbed_lattice", dim=2, window=Window([0, 0], [16, 16]), delta=delta, seed=5)
    s, corr = generate(spec)
    assert corr.max_displacement <= delta
    assert min_pairwise_distance(s.points) >= 1 - 2 * delta
    # every unit cube z + [-1/2, 1/2)^2 fully inside the window holds exactly one point
    for zx in range(1, 16):
        for zy in range(1, 16):
            cube_lo = np.array([zx - 0.5, zy - 0.5])
            inside = np.all((s.points >= cube_lo) & (s.points < cube_lo + 1.0), axis=1)
            assert int(inside.sum()) == 1


def test_perturbed_delta_cap():
    with pytest.raises(InvalidSpec):
        GeneratorSpec(kind="perturbed_lattice", dim=2, window=Window([0, 0], [4, 4]), delta=0.5).validate()


def test_fibonacci_gaps_and_word():
    vals = fibonacci_projection(0.0, 50.0)
    gaps = np.diff(vals)
    assert np.all((np.abs(gaps - 1.0) <= 1e-9) | (np.abs(gaps - PHI) <= 1e-9))
    short = np.abs(gaps - 1.0) <= 1e-9
    assert not np.any(short[:-1] & short[1:])  # no two short gaps adjacent
    # Delone constants of the chain
    assert gaps.min() == pytest.approx(1.0, abs=1e-9)
    assert gaps.max() == pytest.approx(PHI, abs=1e-9)


def test_fibonacci_against_high_precision_strip_oracle():
    """Brute-force cut-and-project at 50-digit precision."""
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 50
    phi = (1 + mp.sqrt(5)) / 2
    lo, hi = 0.0, 40.0
    want = []
    for mm in range(-5, 40):
        for nn in range(-5, 45):
            q = phi * nn - mm
            if -1 <= q < phi:
                t = phi * mm + nn
                if lo <= t < hi:
                    want.append(float(t))
    want = sorted(want)
    got = fibonacci_projection(lo, hi)
    assert len(got) == len(want)
    assert np.allclose(got, want, atol=1e-9)


def _chair_oracle_vertices(iterations: int):
    """Naive subdivision with exact rationals, then scale to unit gap.

    Chairs are (bbox lower corner, size, missing quadrant corner in
    {0,1}^2).  The base decomposition (missing corner (1,1)) is reflected
    into the other orientations; as a self-check, the final chairs' small
    squares must tile the initial L-shape exactly.
    """
    chairs = [(Fraction(0), Fraction(0), Fraction(2), (1, 1))]

    def children(x, y, s, miss):
        h = s / 2
        mx, my = miss
        base = [
            ((x + h / 2, y + h / 2), (1, 1)),  # center chair
            ((x, y), (1, 1)),  # corner chair, opposite the missing quadrant
            ((x + h, y), (0, 1)),  # right arm
            ((x, y + h), (1, 0)),  # top arm
        ]
        out = []
        for (px, py), (cmx, cmy) in base:
            if mx == 0:
                px = 2 * x + s - px - h
                cmx = 1 - cmx
            if my == 0:
                py = 2 * y + s - py - h
                cmy = 1 - cmy
            out.append((px, py, h, (cmx, cmy)))
        return out

    for _ in range(iterations):
        chairs = [c for ch in chairs for c in children(*ch)]

    # self-check: the final chairs' squares exactly tile the initial L
    h_final = chairs[0][2] / 2
    squares = set()
    for x, y, s, (mx, my) in chairs:
        assert s == 2 * h_final
        for sx in (0, 1):
            for sy in (0, 1):
                if (sx, sy) != (mx, my):
                    squares.add((x + sx * h_final, y + sy * h_final))
    n_cells = 2 ** (iterations + 1)
    expected = {
        (Fraction(i) * h_final, Fraction(j) * h_final)
        for i in range(n_cells)
        for j in range(n_cells)
        if not (i >= n_cells // 2 and j >= n_cells // 2)
    }
    assert squares == expected

    scale = 2**iterations
    verts = set()
    for x, y, s, (mx, my) in chairs:
        h = s / 2
        bbox = {(x, y), (x + s, y), (x + s, y + s), (x, y + s)}
        bbox.discard((x + mx * s, y + my * s))  # the missing corner
        notch = {
            (x + h, y + h),
            (x + h, y + my * s),
            (x + mx * s, y + h),
        }
        for vx, vy in bbox | notch:
            verts.add((int(vx * scale), int(vy * scale)))
    return verts


@pytest.mark.parametrize("iterations", [1, 2, 3])
def test_chair_vertices_match_rational_oracle(iterations):
    got = {(int(x), int(y)) for x, y in chair_vertices(iterations)}
    want = _chair_oracle_vertices(iterations)
    assert got == want


def test_chair_vertex_count_matches_oracle_exactly():
    got = chair_vertices(3)
    want = _chair_oracle_vertices(3)
    assert len(got) == len(want)


def test_chair_is_delone_with_unit_separation():
    spec = GeneratorSpec(kind="chair_vertices", dim=2, window=Window([0, 0], [32, 32]), iterations=5)
    s, _ = generate(spec)
    assert min_pairwise_distance(s.points) == 1.0
    # integer coordinates exactly
    assert np.array_equal(s.points, np.rint(s.points))


def test_generate_rejects_bad_specs():
    w = Window([0, 0], [4, 4])
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec(kind="nonsense", dim=2, window=w))
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec(kind="fibonacci_1d", dim=2, window=w))
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec(kind="chair_vertices", dim=2, window=w, iterations=0))
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec(kind="lattice", dim=3, window=w))
