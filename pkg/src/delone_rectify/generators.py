"""Test set generators: integer lattices, seeded perturbed lattices (bounded
displacement by construction), the Fibonacci cut-and-project chain, and chair
substitution-tiling vertices.

Perturbed lattices come with a source correspondence z -> z + u_z certifying
the displacement bound; generation is deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidSpec
from .geometry import PointSet, Window, build_point_set, lattice_points

PHI = (1.0 + math.sqrt(5.0)) / 2.0

KINDS = ("lattice", "perturbed_lattice", "fibonacci_1d", "chair_vertices")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    dim: int
    window: Window
    delta: float = 0.0
    seed: int = 0
    iterations: int = 1

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.dim != self.window.dim:
            raise InvalidSpec(f"dim {self.dim} does not match window dim {self.window.dim}")
        if self.dim < 1:
            raise InvalidSpec("dim must be >= 1")
        if self.kind == "perturbed_lattice":
            if not (0.0 <= self.delta < 0.5):
                raise InvalidSpec(
                    f"delta must lie in [0, 1/2) to keep the set Delone, got {self.delta}"
                )
        if self.kind == "fibonacci_1d" and self.dim != 1:
            raise InvalidSpec("fibonacci_1d is one-dimensional")
        if self.kind == "chair_vertices":
            if self.dim != 2:
                raise InvalidSpec("chair_vertices is two-dimensional")
            if self.iterations < 1:
                raise InvalidSpec("iterations must be >= 1")


@dataclass(frozen=True)
class SourceCorrespondence:
    """Certified pairing z -> z + u_z between lattice points and the
    generated points, with |u_z| <= max_displacement."""

    lattice: np.ndarray
    points: np.ndarray

    @property
    def max_displacement(self) -> float:
        if len(self.lattice) == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.points - self.lattice, axis=1)))

    def __len__(self) -> int:
        return self.lattice.shape[0]


def generate(spec: GeneratorSpec) -> Tuple[PointSet, Optional[SourceCorrespondence]]:
    """Produce the point set described by ``spec``.

    Same seed, same output, bit for bit.
    """
    spec.validate()
    if spec.kind == "lattice":
        pts = lattice_points(spec.window)
        return build_point_set(pts, spec.window), None
    if spec.kind == "perturbed_lattice":
        return _perturbed_lattice(spec)
    if spec.kind == "fibonacci_1d":
        pts = fibonacci_projection(float(spec.window.lower[0]), float(spec.window.upper[0]))
        return build_point_set(pts.reshape(-1, 1), spec.window), None
    # chair_vertices
    verts = chair_vertices(spec.iterations)
    keep = Window(spec.window.lower, spec.window.upper).contains(verts)
    return build_point_set(verts[keep], spec.window), None


def _perturbed_lattice(spec: GeneratorSpec) -> Tuple[PointSet, SourceCorrespondence]:
    z = lattice_points(spec.window)
    rng = np.random.default_rng(spec.seed)
    n, d = z.shape
    if spec.delta == 0.0:
        u = np.zeros_like(z)
    else:
        u = rng.uniform(-spec.delta, spec.delta, size=(n, d))
        bad = np.sum(u * u, axis=1) > spec.delta**2
        while np.any(bad):
            u[bad] = rng.uniform(-spec.delta, spec.delta, size=(int(bad.sum()), d))
            bad = np.sum(u * u, axis=1) > spec.delta**2
    moved = z + u
    keep = spec.window.contains(moved)
    corr = SourceCorrespondence(lattice=z[keep].copy(), points=moved[keep].copy())
    return build_point_set(moved[keep], spec.window), corr


def fibonacci_projection(lo: float, hi: float) -> np.ndarray:
    """Fibonacci chain on [lo, hi): projections phi*m + n of the integer
    points (m, n) whose internal coordinate phi*n - m falls in the canonical
    strip [-1, phi).  Gaps come out exactly in {1, phi}."""
    vals = []
    m_lo = int(math.floor((PHI * lo - PHI) / (PHI**2 + 1))) - 2
    m_hi = int(math.ceil((PHI * hi + 1) / (PHI**2 + 1))) + 2
    for m in range(m_lo, m_hi + 1):
        # strip: (m - 1)/phi <= n < (m + phi)/phi;  window: lo <= phi*m + n < hi
        n_min = math.ceil(max((m - 1) / PHI, lo - PHI * m))
        n_max_excl = min((m + PHI) / PHI, hi - PHI * m)
        n = n_min
        while n < n_max_excl:
            q = PHI * n - m
            if -1.0 <= q < PHI:
                t = PHI * m + n
                if lo <= t < hi:
                    vals.append(t)
            n += 1
    return np.sort(np.array(vals, dtype=float))


# --- chair substitution -----------------------------------------------------
#
# A chair is an L-tromino: the box q +/- h minus its h x h corner square in
# quadrant sigma, sigma in {+1,-1}^2.  Inflating by 2 splits it into four
# half-size chairs; iterating from half-size 2**k down to 1 keeps every
# vertex at integer coordinates, so the minimal vertex gap is exactly 1.


def _chair_children(q: Tuple[int, int], sigma: Tuple[int, int], h: int):
    sx, sy = sigma
    g = h // 2
    return [
        (q, (sx, sy), g),
        ((q[0] - sx * g, q[1] - sy * g), (sx, sy), g),
        ((q[0] + sx * g, q[1] - sy * g), (-sx, sy), g),
        ((q[0] - sx * g, q[1] + sy * g), (sx, -sy), g),
    ]


def _chair_outline(q: Tuple[int, int], sigma: Tuple[int, int], h: int):
    sx, sy = sigma
    x, y = q
    return (
        (x - sx * h, y - sy * h),
        (x + sx * h, y - sy * h),
        (x + sx * h, y),
        (x, y),
        (x, y + sy * h),
        (x - sx * h, y + sy * h),
    )


def chair_vertices(iterations: int) -> np.ndarray:
    """Vertex set of the chair tiling after ``iterations`` subdivisions of
    an initial L-tromino, at unit scale (integer coordinates).

    The initial tromino occupies [0, 2**(k+1))^2 minus its upper-right
    quadrant, so e.g. [0, 2**k)^2 is fully tiled.
    """
    if iterations < 1:
        raise InvalidSpec("iterations must be >= 1")
    h = 2**iterations
    chairs = [((h, h), (1, 1), h)]
    for _ in range(iterations):
        chairs = [child for c in chairs for child in _chair_children(*c)]
    verts = {v for c in chairs for v in _chair_outline(*c)}
    arr = np.array(sorted(verts), dtype=float)
    return arr
