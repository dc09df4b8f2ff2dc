"""Patches of a point set and empirical repetitivity profiling.

A patch is the trace of the set in a closed ball, recentred at the origin.
``find_translated_copy`` searches a ball for a translate of a patch; the
profile measures, per patch radius r, how large a ball R is needed before
every sampled r-patch recurs everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import BallOutsideWindow, WindowTooSmall
from .geometry import PointSet, as_point


@dataclass(frozen=True)
class Patch:
    """Points within ``radius`` of ``center``, stored as offsets from it."""

    center: np.ndarray
    radius: float
    offsets: np.ndarray  # (k, d), all norms <= radius

    def __len__(self) -> int:
        return self.offsets.shape[0]


def _require_ball_inside(s: PointSet, center: np.ndarray, r: float) -> None:
    if np.any(center - r < s.window.lower) or np.any(center + r > s.window.upper):
        raise BallOutsideWindow(
            f"ball(center={center.tolist()}, r={r}) leaves window"
        )


def patch_at(s: PointSet, center, r: float) -> Patch:
    """Extract the r-patch at ``center``; the ball must fit in the window."""
    c = as_point(center, s.dim)
    _require_ball_inside(s, c, r)
    offsets = s.points_in_ball(c, r) - c
    order = np.lexsort(offsets.T[::-1])
    offsets = offsets[order].copy()
    offsets.flags.writeable = False
    return Patch(center=c, radius=float(r), offsets=offsets)


def find_translated_copy(
    s: PointSet, p: Patch, search_center, R: float, tol: float
) -> Optional[np.ndarray]:
    """Find a translation t with (p.offsets + t) inside ball(search_center, R),
    matching points of ``s`` within ``tol``, and with no extra point of ``s``
    in ball(t, p.radius - tol).

    Candidate translations anchor each point of ``s`` in the search ball as
    the image of the patch's center-nearest offset.  Returns None when no
    candidate works.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    c = as_point(search_center, s.dim)
    _require_ball_inside(s, c, R)
    if len(p) == 0:
        return c.copy()

    norms = np.linalg.norm(p.offsets, axis=1)
    o_min = p.offsets[int(np.argmin(norms))]

    cand_idx = s.query_ball(c, R)
    if cand_idx.size == 0:
        return None
    anchors = s.points[cand_idx]
    ts = anchors - o_min
    # the copy must lie inside the search ball
    ok = np.linalg.norm(ts - c, axis=1) + p.radius <= R + 1e-12
    ts = ts[ok]
    if ts.shape[0] == 0:
        return None
    ts = ts[np.lexsort(ts.T[::-1])]
    ts = ts[np.argsort(np.linalg.norm(ts - c, axis=1), kind="stable")]

    k = len(p)
    for t in ts:
        ball_idx = s.query_ball(t, p.radius - tol)
        if ball_idx.size > k:
            continue  # more points than offsets: some would be unmatched
        matched: set = set()
        hit = True
        for o in p.offsets:
            idx = s.query_ball(t + o, tol)
            if idx.size == 0:
                hit = False
                break
            matched.update(int(i) for i in idx)
        if hit and set(int(i) for i in ball_idx) <= matched:
            return t.copy()
    return None


@dataclass(frozen=True)
class ProfileEntry:
    r: float
    r_est: Optional[float]  # None: not found within the window
    searched_up_to: float


def repetitivity_profile(
    s: PointSet,
    radii: Sequence[float],
    tol: float,
    anchors_per_dim: int = 3,
    positions_per_dim: int = 3,
) -> List[ProfileEntry]:
    """For each r, the smallest R in the schedule 2r, 4r, 8r, ... such that
    every sampled r-patch recurs in every sampled R-ball position.

    Anchors and ball positions are uniform grids over the admissible region;
    ``None`` is reported when the schedule exhausts the window.
    """
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or sorted(radii) != radii:
        raise ValueError("radii must be positive and ascending")
    half_extent = float(np.min(s.window.extent)) / 2.0
    for r in radii:
        if 2 * r > half_extent:
            raise WindowTooSmall(
                f"no 2r-ball fits for r={r}: window half-extent {half_extent}"
            )

    def centers_grid(radius: float, per_dim: int) -> np.ndarray:
        axes = [
            np.linspace(s.window.lower[k] + radius, s.window.upper[k] - radius, per_dim)
            for k in range(s.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    out: List[ProfileEntry] = []
    for r in radii:
        patches = [patch_at(s, a, r) for a in centers_grid(r, anchors_per_dim)]
        r_est: Optional[float] = None
        searched = 0.0
        R = 2 * r
        while R <= half_extent:
            searched = R
            positions = centers_grid(R, positions_per_dim)
            if all(
                find_translated_copy(s, p, pos, R, tol) is not None
                for p in patches
                for pos in positions
            ):
                r_est = R
                break
            R *= 2
        out.append(ProfileEntry(r=r, r_est=r_est, searched_up_to=searched))
    return out
