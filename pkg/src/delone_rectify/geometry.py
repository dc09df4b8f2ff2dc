"""Core point-set types: axis-aligned windows, a uniform-grid spatial hash,
immutable finite point sets, and Delone constants (separation and covering
radius) measured on a window.

Coordinates are plain float64 throughout; a point is a length-d numpy array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DegenerateWindow,
    DimensionMismatch,
    DuplicatePoint,
    EmptySet,
    PointOutsideWindow,
)

DEDUP_DISTANCE = 1e-12


def as_point(p, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to a float64 vector, optionally checking its dimension."""
    a = np.asarray(p, dtype=float).reshape(-1)
    if dim is not None and a.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite coordinates: {a}")
    return a


@dataclass(frozen=True)
class Window:
    """Half-open axis-aligned box [lower, upper)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_point(self.lower)
        up = as_point(self.upper, dim=lo.shape[0])
        if not np.all(lo < up):
            raise DegenerateWindow(f"window must satisfy lower < upper, got {lo} .. {up}")
        lo.flags.writeable = False
        up.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.extent))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of ``pts`` inside the half-open box."""
        pts = np.atleast_2d(pts)
        return np.all((pts >= self.lower) & (pts < self.upper), axis=1)

    def shrink(self, margin: float) -> "Window":
        if margin < 0:
            raise ValueError("margin must be >= 0")
        return Window(self.lower + margin, self.upper - margin)

    def inflate(self, margin: float) -> "Window":
        return Window(self.lower - margin, self.upper + margin)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Window)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


class GridIndex:
    """Uniform-grid spatial hash over a fixed array of points.

    Cells are half-open cubes of side ``cell_size`` anchored at the origin;
    ``query_ball`` returns exactly the indices a linear scan would (closed
    ball, |p - center| <= r).
    """

    def __init__(self, points: np.ndarray, cell_size: float):
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.points = points
        self.cell_size = float(cell_size)
        self.dim = points.shape[1] if points.ndim == 2 else 0
        self._cells: dict[tuple, np.ndarray] = {}
        if len(points):
            keys = np.floor(points / self.cell_size).astype(np.int64)
            order = np.lexsort(keys.T[::-1])
            sorted_keys = keys[order]
            change = np.any(np.diff(sorted_keys, axis=0) != 0, axis=1)
            starts = np.concatenate(([0], np.nonzero(change)[0] + 1, [len(order)]))
            for a, b in zip(starts[:-1], starts[1:]):
                self._cells[tuple(sorted_keys[a])] = np.sort(order[a:b])

    def query_ball(self, center: np.ndarray, r: float) -> np.ndarray:
        """Indices of points with |p - center| <= r, ascending."""
        if r < 0 or not self._cells:
            return np.empty(0, dtype=np.int64)
        lo = np.floor((center - r) / self.cell_size).astype(np.int64)
        hi = np.floor((center + r) / self.cell_size).astype(np.int64)
        ranges = [range(int(a), int(b) + 1) for a, b in zip(lo, hi)]
        chunks = []
        for key in _iter_cells(ranges):
            got = self._cells.get(key)
            if got is not None:
                chunks.append(got)
        if not chunks:
            return np.empty(0, dtype=np.int64)
        cand = np.concatenate(chunks)
        d2 = np.sum((self.points[cand] - center) ** 2, axis=1)
        hit = cand[d2 <= r * r]
        hit.sort()
        return hit

    def count_ball(self, center: np.ndarray, r: float) -> int:
        return int(self.query_ball(center, r).shape[0])

    def nearest_distance(self, center: np.ndarray, exclude: Optional[int] = None) -> float:
        """Distance from ``center`` to the nearest indexed point (optionally
        skipping one index). Expanding-radius search; +inf when empty."""
        n = len(self.points)
        if n == 0 or (n == 1 and exclude is not None):
            return math.inf
        r = self.cell_size
        while True:
            idx = self.query_ball(center, r)
            if exclude is not None:
                idx = idx[idx != exclude]
            if idx.size:
                d = np.linalg.norm(self.points[idx] - center, axis=1)
                return float(d.min())
            r *= 2.0


def _iter_cells(ranges):
    if len(ranges) == 1:
        for a in ranges[0]:
            yield (a,)
    elif len(ranges) == 2:
        for a in ranges[0]:
            for b in ranges[1]:
                yield (a, b)
    else:
        import itertools

        yield from itertools.product(*ranges)


@dataclass(frozen=True)
class PointSet:
    """Immutable finite window of a point set with a spatial index."""

    dim: int
    points: np.ndarray
    window: Window
    cell_size: float
    index: GridIndex = field(repr=False, compare=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    def query_ball(self, center, r: float) -> np.ndarray:
        """Indices of points within the closed ball of radius r."""
        return self.index.query_ball(as_point(center, self.dim), r)

    def points_in_ball(self, center, r: float) -> np.ndarray:
        return self.points[self.query_ball(center, r)]


def build_point_set(points, window: Window, cell_size: float = 1.0) -> PointSet:
    """Validate and index a finite point collection.

    Rejects points outside the window and pairs closer than 1e-12.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        pts = np.empty((0, window.dim))
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[1] != window.dim:
        raise DimensionMismatch(
            f"points have dimension {pts.shape[-1] if pts.ndim == 2 else '?'}, window {window.dim}"
        )
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates in point list")
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    inside = window.contains(pts)
    if not np.all(inside):
        bad = pts[~inside][0]
        raise PointOutsideWindow(f"point {bad.tolist()} outside window")
    index = GridIndex(pts, cell_size)
    for i in range(len(pts)):
        hits = index.query_ball(pts[i], DEDUP_DISTANCE)
        if hits.size > 1:
            raise DuplicatePoint(f"points closer than {DEDUP_DISTANCE}: index {i}")
    pts = pts.copy()
    pts.flags.writeable = False
    return PointSet(dim=window.dim, points=pts, window=window, cell_size=float(cell_size), index=index)


def min_pairwise_distance(points: np.ndarray, cell_hint: float = 1.0) -> float:
    """Exact minimum pairwise distance; +inf for fewer than two points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if n < 2:
        return math.inf
    index = GridIndex(pts, cell_hint)
    best = math.inf
    for i in range(n):
        d = index.nearest_distance(pts[i], exclude=i)
        if d < best:
            best = d
    return best


@dataclass(frozen=True)
class DeloneConstants:
    """Separation r_sep (None for a single point) and the grid-sampled
    covering radius estimate, with the pitch that bounds its error."""

    r_sep: Optional[float]
    r_cov: float
    grid_pitch: float

    @property
    def r_sep_or_inf(self) -> float:
        return math.inf if self.r_sep is None else self.r_sep


def delone_constants(
    s: PointSet, margin: float, max_grid_nodes: int = 4_000_000
) -> DeloneConstants:
    """Measure uniform separation and covering on the margin-shrunk window.

    r_sep is the exact minimum pairwise distance.  R_cov is the max, over a
    grid of pitch <= r_sep/4 covering the shrunk window, of the distance to
    the nearest point; the reported pitch bounds the approximation error.
    The pitch is coarsened (and reported) if the grid would exceed
    ``max_grid_nodes``.
    """
    if len(s) == 0:
        raise EmptySet("delone_constants needs a nonempty set")
    if margin < 0 or np.any(2 * margin >= s.window.extent):
        raise DegenerateWindow(f"margin {margin} swallows the window")
    core = s.window.shrink(margin)

    r_sep_val = min_pairwise_distance(s.points, cell_hint=s.cell_size)
    r_sep = None if math.isinf(r_sep_val) else r_sep_val

    pitch = (min(r_sep_val, float(np.max(core.extent))) if r_sep is not None else float(np.max(core.extent))) / 4.0
    counts = np.maximum(np.ceil(core.extent / pitch).astype(int) + 1, 2)
    while int(np.prod(counts.astype(float))) > max_grid_nodes:
        pitch *= 2.0
        counts = np.maximum(np.ceil(core.extent / pitch).astype(int) + 1, 2)
    axes = [np.linspace(core.lower[k], core.upper[k], counts[k]) for k in range(s.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    tree = cKDTree(s.points)
    dists, _ = tree.query(nodes, k=1)
    r_cov = float(np.max(dists))
    actual_pitch = float(max((core.extent[k] / (counts[k] - 1)) for k in range(s.dim)))
    return DeloneConstants(r_sep=r_sep, r_cov=r_cov, grid_pitch=actual_pitch)


def lattice_points(window: Window) -> np.ndarray:
    """Integer lattice points inside the half-open window, in lexicographic
    order."""
    axes = [
        np.arange(math.ceil(window.lower[k]), math.ceil(window.upper[k]), dtype=float)
        for k in range(window.dim)
    ]
    if any(a.size == 0 for a in axes):
        return np.empty((0, window.dim))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
