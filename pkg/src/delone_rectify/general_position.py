"""General-position preparation of the segment family joining matched pairs.

Before tubes and twists can be laid out, the segments from each (possibly
perturbed) source to its lattice target must be quantitatively
non-degenerate: in d >= 3 pairwise separated, in d = 2 with transversal,
well-spaced crossings that keep clear of every endpoint.  A seeded search
perturbs sources inside small disjoint balls until the conditions hold,
halving the separation scale when retries run out.

Resting positions of degenerate pairs (source already on its target) are
held to the same clearances as endpoints: later tubes must not swallow a
traveler that is already home.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import GeneralPositionUnreachable, NonMonotone1D
from .localmaps import BallPush
from .matching import DisplacementMap

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class GeneralPositionParams:
    """Scales of the construction: separation epsilon, subsegment tube
    radius epsilon_prime, perturbation size delta, and the retry budget."""

    epsilon: float
    epsilon_prime: float
    delta: float
    seed: int = 0
    max_retries: int = 30
    epsilon_floor: float = 1e-3

    def validate(self, r_sep: float) -> None:
        m = min(1.0, r_sep)
        if not (0 < self.epsilon < m / 4.0):
            raise ValueError(f"epsilon must lie in (0, {m / 4.0:.6g}), got {self.epsilon}")
        if not (0 < self.epsilon_prime < self.epsilon / 6.0):
            raise ValueError(
                f"epsilon_prime must lie in (0, epsilon/6 = {self.epsilon / 6.0:.6g}), "
                f"got {self.epsilon_prime}"
            )
        # perturbation pushes live in balls of radius 0.45*m; the push ratio
        # cap |u| <= radius/2 tightens the Delone bound m/4 to 0.225*m
        if not (0 <= self.delta <= 0.2249 * m):
            raise ValueError(
                f"delta must lie in [0, {0.2249 * m:.6g}] (perturbation push ratio), got {self.delta}"
            )
        if self.epsilon_floor <= 0 or self.epsilon_floor > self.epsilon:
            raise ValueError("epsilon_floor must lie in (0, epsilon]")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")

    @classmethod
    def defaults_for(cls, r_sep: float, seed: int = 0) -> "GeneralPositionParams":
        m = min(1.0, r_sep)
        eps = 0.2 * m
        return cls(
            epsilon=eps,
            epsilon_prime=0.15 * eps,
            delta=0.05 * m,
            seed=seed,
            max_retries=30,
            epsilon_floor=min(1e-3, eps),
        )


@dataclass(frozen=True)
class Crossing:
    other: int  # traveler index of the crossing partner
    point: np.ndarray
    angle: float  # acute crossing angle, radians
    t: float  # parameter along the owner's segment


@dataclass(frozen=True)
class Segment:
    """One traveler's straight path from perturbed source to target, with
    its crossings ordered by parameter."""

    traveler: int
    a: np.ndarray
    b: np.ndarray
    crossings: Tuple[Crossing, ...] = ()

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True)
class GeneralPosition:
    prefix: Tuple[BallPush, ...]
    prefix_travelers: Tuple[int, ...]  # traveler index per prefix push
    segments: Tuple[Segment, ...]
    epsilon_final: float
    positions: np.ndarray  # (n, d) all travelers after the prefix
    degenerate: Tuple[int, ...]  # travelers resting on their targets
    attempts_used: int


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points p (m, d) to segments [a_k, b_k] (s, d), as an
    (m, s) matrix."""
    ab = b - a  # (s, d)
    denom = np.einsum("sd,sd->s", ab, ab)
    denom = np.where(denom == 0.0, 1.0, denom)
    t = np.einsum("msd,sd->ms", p[:, None, :] - a[None, :, :], ab) / denom
    t = np.clip(t, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    return np.linalg.norm(p[:, None, :] - closest, axis=2)


def _pt_seg_pairs(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise distance from p_k to segment [a_k, b_k]."""
    ab = b - a
    denom = np.einsum("kd,kd->k", ab, ab)
    t = np.einsum("kd,kd->k", p - a, ab) / np.where(denom == 0.0, 1.0, denom)
    t = np.clip(t, 0.0, 1.0)
    diff = p - (a + t[:, None] * ab)
    return np.sqrt(np.einsum("kd,kd->k", diff, diff))


def points_vs_segments_below(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, cutoff: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sparse point-segment distances: all (point k, segment s, dist) with
    dist possibly below ``cutoff`` (distances >= cutoff may be omitted).

    Candidates are culled through a tree on segment midpoints, so the cost
    scales with the number of nearby pairs rather than m*s.
    """
    if p.shape[0] == 0 or a.shape[0] == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0)
    mid = 0.5 * (a + b)
    half = 0.5 * np.sqrt(np.einsum("kd,kd->k", b - a, b - a))
    reach = float(half.max()) + cutoff
    tree = cKDTree(mid)
    neighbors = tree.query_ball_point(p, reach)
    pi = np.concatenate([np.full(len(ns), k, dtype=int) for k, ns in enumerate(neighbors)]) if len(p) else np.empty(0, dtype=int)
    si = np.concatenate([np.asarray(ns, dtype=int) for ns in neighbors]) if len(p) else np.empty(0, dtype=int)
    if pi.size == 0:
        return pi, si, np.empty(0)
    d = _pt_seg_pairs(p[pi], a[si], b[si])
    return pi, si, d


def segment_pairs_below(
    a: np.ndarray, b: np.ndarray, cutoff: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sparse segment-segment distances: (i, j, dist) with i < j covering
    every pair whose distance can be below ``cutoff``."""
    n = a.shape[0]
    if n < 2:
        return np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0)
    mid = 0.5 * (a + b)
    half = 0.5 * np.sqrt(np.einsum("kd,kd->k", b - a, b - a))
    reach = 2.0 * float(half.max()) + cutoff
    tree = cKDTree(mid)
    pairs = tree.query_pairs(reach, output_type="ndarray")
    if pairs.shape[0] == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int), np.empty(0)
    ii, jj = pairs[:, 0], pairs[:, 1]
    d = _segseg_rowwise(a[ii], b[ii], a[jj], b[jj])
    return ii, jj, d


def segment_pair_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Min distances between all segment pairs i < j; segments given by
    endpoint arrays (n, d).  Returns a flat array in triu order."""
    n = a.shape[0]
    ii, jj = np.triu_indices(n, 1)
    if ii.size == 0:
        return np.empty(0)
    return _segseg_rowwise(a[ii], b[ii], a[jj], b[jj])


def _segseg_rowwise(
    a1: np.ndarray, b1: np.ndarray, a2: np.ndarray, b2: np.ndarray
) -> np.ndarray:
    """Rowwise segment-segment distance.

    The minimum is attained either between interior points of the carrying
    lines (checked when the unclamped parameters land in [0,1]^2) or at an
    endpoint, so the min over those candidates is exact.
    """
    u = b1 - a1
    v = b2 - a2
    w0 = a1 - a2
    A = np.einsum("kd,kd->k", u, u)
    B = np.einsum("kd,kd->k", u, v)
    C = np.einsum("kd,kd->k", v, v)
    D = np.einsum("kd,kd->k", u, w0)
    E = np.einsum("kd,kd->k", v, w0)
    den = A * C - B * B

    best = np.full(a1.shape[0], np.inf)
    for p, sa, sb in ((a1, a2, b2), (b1, a2, b2), (a2, a1, b1), (b2, a1, b1)):
        best = np.minimum(best, _pt_seg_pairs(p, sa, sb))
    safe = den > 1e-30
    if np.any(safe):
        sc = np.where(safe, (B * E - C * D) / np.where(safe, den, 1.0), -1.0)
        tc = np.where(safe, (A * E - B * D) / np.where(safe, den, 1.0), -1.0)
        ok = safe & (sc >= 0.0) & (sc <= 1.0) & (tc >= 0.0) & (tc <= 1.0)
        if np.any(ok):
            diff = w0[ok] + sc[ok, None] * u[ok] - tc[ok, None] * v[ok]
            best[ok] = np.minimum(best[ok], np.sqrt(np.einsum("kd,kd->k", diff, diff)))
    return best


def find_crossings_2d(a: np.ndarray, b: np.ndarray):
    """Proper interior crossings among 2d segments [a_k, b_k].

    Returns (i, j, point, angle, t_i, t_j) arrays.  Touching and collinear
    configurations are not reported here; the endpoint-clearance conditions
    reject them independently.
    """
    n = a.shape[0]
    if n < 2:
        empty = np.empty(0)
        return (
            np.empty(0, dtype=int),
            np.empty(0, dtype=int),
            np.empty((0, 2)),
            empty,
            empty,
            empty,
        )
    mid = 0.5 * (a + b)
    half = 0.5 * np.sqrt(np.einsum("kd,kd->k", b - a, b - a))
    tree = cKDTree(mid)
    pairs = tree.query_pairs(2.0 * float(half.max()) + 1e-12, output_type="ndarray")
    if pairs.shape[0] == 0:
        empty = np.empty(0)
        return (
            np.empty(0, dtype=int),
            np.empty(0, dtype=int),
            np.empty((0, 2)),
            empty,
            empty,
            empty,
        )
    ii, jj = pairs[:, 0], pairs[:, 1]
    r = b[ii] - a[ii]
    s = b[jj] - a[jj]
    qp = a[jj] - a[ii]
    den = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
    nz = den != 0.0
    t = np.where(nz, (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / np.where(nz, den, 1.0), -1.0)
    u = np.where(nz, (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / np.where(nz, den, 1.0), -1.0)
    hit = nz & (t > 0.0) & (t < 1.0) & (u > 0.0) & (u < 1.0)
    ii, jj, t, u = ii[hit], jj[hit], t[hit], u[hit]
    pts = a[ii] + t[:, None] * (b[ii] - a[ii])
    ri = b[ii] - a[ii]
    sj = b[jj] - a[jj]
    cosang = np.abs(np.einsum("kd,kd->k", ri, sj)) / (
        np.linalg.norm(ri, axis=1) * np.linalg.norm(sj, axis=1)
    )
    angle = np.arccos(np.clip(cosang, 0.0, 1.0))
    return ii, jj, pts, angle, t, u


def _conditions_hold(
    dim: int,
    A: np.ndarray,
    B: np.ndarray,
    resting: np.ndarray,
    eps: float,
) -> Tuple[bool, Optional[tuple]]:
    """Check the general-position conditions at scale eps for active
    segments [A_k, B_k] and resting degenerate positions. Returns the
    crossing data on success (d = 2)."""
    n = A.shape[0]
    if dim >= 3:
        if n >= 2:
            _, _, d = segment_pairs_below(A, B, eps)
            if d.size and np.any(d < eps):
                return False, None
        if len(resting) and n >= 1:
            _, _, d = points_vs_segments_below(resting, A, B, eps)
            if d.size and np.any(d < eps):
                return False, None
        return True, None

    # d == 2
    ii, jj, pts, angle, t, u = find_crossings_2d(A, B)
    if ii.size:
        if np.any(angle < eps):
            return False, None
        if ii.size >= 2:
            tree = cKDTree(pts)
            close = tree.query_pairs(eps, output_type="ndarray")
            if close.shape[0]:
                return False, None
    endpoints = (
        np.concatenate([A, B, resting]) if len(resting) else np.concatenate([A, B])
    )
    if ii.size and len(endpoints):
        tree = cKDTree(pts)
        dmin, _ = tree.query(endpoints, k=1)
        if np.any(dmin < eps):
            return False, None
    if n >= 1 and len(endpoints):
        owner = np.concatenate(
            [np.arange(n), np.arange(n), np.full(len(resting), -1, dtype=int)]
        )
        pi, si, d = points_vs_segments_below(endpoints, A, B, eps)
        if d.size:
            foreign = owner[pi] != si
            if np.any(d[foreign] < eps):
                return False, None
    return True, (ii, jj, pts, angle, t, u)


def check_monotone_1d(sources: np.ndarray, targets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sort pairs by source and require the target order to agree."""
    s = sources.reshape(-1)
    t = targets.reshape(-1)
    order = np.argsort(s, kind="stable")
    s, t = s[order], t[order]
    if np.any(np.diff(t) <= 0):
        raise NonMonotone1D("targets are not increasing with sources; use order-preserving matching")
    return s, t


def perturb_general_position(
    m: DisplacementMap, params: GeneralPositionParams, r_sep: float
) -> GeneralPosition:
    """Move sources by at most delta (disjointly supported ball pushes)
    until the segment family is in quantified general position.

    Attempt 0 of every scale level tries the unperturbed configuration, so
    inputs already in general position get an empty prefix.  On exhausting
    max_retries the scale is halved; below epsilon_floor the search fails.
    """
    params.validate(r_sep)
    dim = m.dim
    if dim == 1:
        check_monotone_1d(m.sources, m.targets)
        return GeneralPosition(
            prefix=(),
            prefix_travelers=(),
            segments=(),
            epsilon_final=params.epsilon,
            positions=m.sources.copy(),
            degenerate=(),
            attempts_used=0,
        )

    n = len(m)
    src = m.sources
    tgt = m.targets
    perturb_radius = 0.45 * min(r_sep, 1.0)
    rng = np.random.default_rng(params.seed)
    retries = params.max_retries if params.delta > 0 else 1

    eps = params.epsilon
    attempts_total = 0
    while eps >= params.epsilon_floor * (1.0 - 1e-12):
        for attempt in range(retries):
            attempts_total += 1
            if attempt == 0:
                u = np.zeros_like(src)
            else:
                u = rng.uniform(-params.delta, params.delta, size=src.shape)
                bad = np.einsum("ij,ij->i", u, u) > params.delta**2
                while np.any(bad):
                    u[bad] = rng.uniform(-params.delta, params.delta, size=(int(bad.sum()), dim))
                    bad = np.einsum("ij,ij->i", u, u) > params.delta**2
            pre_deg = np.linalg.norm(src - tgt, axis=1) <= DEGENERATE_TOL
            u[pre_deg] = 0.0
            positions = src + u
            active = np.linalg.norm(positions - tgt, axis=1) > DEGENERATE_TOL
            A, B = positions[active], tgt[active]
            ok, crossing_data = _conditions_hold(dim, A, B, positions[~active], eps)
            if not ok:
                continue
            moved = [i for i in range(n) if np.any(u[i] != 0.0)]
            prefix = tuple(
                BallPush(center=src[i], radius=perturb_radius, offset=u[i]) for i in moved
            )
            segments = _build_segments(np.nonzero(active)[0], A, B, crossing_data)
            return GeneralPosition(
                prefix=prefix,
                prefix_travelers=tuple(moved),
                segments=segments,
                epsilon_final=eps,
                positions=positions,
                degenerate=tuple(int(i) for i in np.nonzero(~active)[0]),
                attempts_used=attempts_total,
            )
        eps /= 2.0
    raise GeneralPositionUnreachable(
        f"no admissible perturbation above epsilon_floor={params.epsilon_floor} "
        f"after {attempts_total} attempts"
    )


def _build_segments(
    active_idx: np.ndarray, A: np.ndarray, B: np.ndarray, crossing_data
) -> Tuple[Segment, ...]:
    per: List[List[Crossing]] = [[] for _ in range(A.shape[0])]
    if crossing_data is not None:
        ii, jj, pts, angle, t, u = crossing_data
        for k in range(len(ii)):
            i, j = int(ii[k]), int(jj[k])
            per[i].append(
                Crossing(other=int(active_idx[j]), point=pts[k].copy(), angle=float(angle[k]), t=float(t[k]))
            )
            per[j].append(
                Crossing(other=int(active_idx[i]), point=pts[k].copy(), angle=float(angle[k]), t=float(u[k]))
            )
    segments = []
    for k in range(A.shape[0]):
        crossings = tuple(sorted(per[k], key=lambda c: c.t))
        segments.append(
            Segment(traveler=int(active_idx[k]), a=A[k].copy(), b=B[k].copy(), crossings=crossings)
        )
    return tuple(segments)
