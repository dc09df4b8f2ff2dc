"""Construction and evaluation of the rectifying homeomorphism.

Given a displacement map, ``build_plan`` produces an explicit, evaluable
bi-Lipschitz homeomorphism of R^d equal to the identity outside a bounded
region and sending every source exactly onto its lattice target:

  d = 1   a monotone piecewise-linear interpolation of the pairs;
  d >= 3  a general-position perturbation followed by one tube of ball
          pushes per segment (tubes disjoint by segment separation);
  d = 2   perturbation, then per-traveler scheduling: tubes along
          subsegments between crossing disks and a half twist per crossing
          passage, each twist emitted once per incident traveler.

Travelers are threaded through the exact floating-point orbit at build
time: every tube push lands its carried point bit-exactly on the next
push's center, so target residuals stay at rounding level no matter how
long the chains are.  The ledger records enough (legs, supports, resting
positions) to audit the schedule and to render the construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import TubeClearanceViolated
from .general_position import (
    GeneralPosition,
    GeneralPositionParams,
    Segment,
    check_monotone_1d,
    perturb_general_position,
    point_segment_distance,
    points_vs_segments_below,
    segment_pairs_below,
)
from .geometry import Window, min_pairwise_distance
from .localmaps import (
    BallPush,
    HalfTwist,
    LocalMap,
    chain_endpoint,
    subdivide,
    tube_push,
)
from .matching import DisplacementMap

TARGET_RESIDUAL_GUARD = 1e-9


@dataclass(frozen=True)
class LegRecord:
    """One contiguous run of maps: a tube along [a, b] with its radius, or a
    single twist (a = b = center, radius = support radius)."""

    kind: str  # "tube" | "twist"
    map_start: int  # global map indices [map_start, map_end)
    map_end: int
    a: np.ndarray
    b: np.ndarray
    radius: float


@dataclass(frozen=True)
class TravelerLog:
    index: int
    source: np.ndarray
    start: np.ndarray  # position after the perturbation prefix
    target: np.ndarray
    degenerate: bool
    prefix_map: int  # global index of its perturbation push, -1 if none
    journey: Tuple[int, int]  # global map range [first, last), (-1, -1) if none
    legs: Tuple[LegRecord, ...]
    waypoints: np.ndarray  # polyline source -> start -> nodes -> target
    crossings: Tuple[np.ndarray, ...]  # crossing points along its segment


@dataclass(frozen=True)
class PlanLedger:
    travelers: Tuple[TravelerLog, ...]
    active: Tuple[int, ...]  # active traveler per global map index


@dataclass(frozen=True)
class HomeoPlan:
    """Ordered composition of local maps realizing the rectification."""

    dim: int
    kind: str  # "local_maps" | "monotone_1d"
    prefix: Tuple[LocalMap, ...]
    maps: Tuple[LocalMap, ...]
    params: GeneralPositionParams
    epsilon_final: float
    bounding_region: Window
    ledger: PlanLedger
    breakpoints: Optional[Tuple[np.ndarray, np.ndarray]] = None  # d = 1

    @property
    def n_maps(self) -> int:
        return len(self.prefix) + len(self.maps)

    def all_maps(self) -> Tuple[LocalMap, ...]:
        return self.prefix + self.maps


# --- construction -----------------------------------------------------------


def build_plan(
    m: DisplacementMap, params: GeneralPositionParams, r_sep: float
) -> HomeoPlan:
    """Build the homeomorphism plan for a displacement map.

    ``r_sep`` is the minimum pairwise distance of the map's sources (pass
    math.inf for a single pair); it scales the perturbation supports.
    """
    if m.dim == 1:
        return _build_plan_1d(m, params)
    gp = perturb_general_position(m, params, r_sep)
    if m.dim == 2:
        return _build_plan_tubes(m, params, gp, r_sep, twists=True)
    return _build_plan_tubes(m, params, gp, r_sep, twists=False)


def plan_for_map(m: DisplacementMap, params: Optional[GeneralPositionParams] = None, seed: int = 0) -> HomeoPlan:
    """Convenience wrapper: derive r_sep from the map and default params."""
    r_sep = min_pairwise_distance(m.sources) if len(m) >= 2 else math.inf
    if params is None:
        params = GeneralPositionParams.defaults_for(r_sep, seed=seed)
    return build_plan(m, params, r_sep)


def _build_plan_1d(m: DisplacementMap, params: GeneralPositionParams) -> HomeoPlan:
    src, tgt = check_monotone_1d(m.sources, m.targets)
    if len(src):
        lo = min(src[0], tgt[0]) - 1.0
        hi = max(src[-1], tgt[-1]) + 1.0
    else:
        lo, hi = float(m.core.lower[0]), float(m.core.upper[0])
    travelers = tuple(
        TravelerLog(
            index=i,
            source=np.array([src[i]]),
            start=np.array([src[i]]),
            target=np.array([tgt[i]]),
            degenerate=bool(src[i] == tgt[i]),
            prefix_map=-1,
            journey=(-1, -1),
            legs=(),
            waypoints=np.array([[src[i]], [tgt[i]]]),
            crossings=(),
        )
        for i in range(len(src))
    )
    return HomeoPlan(
        dim=1,
        kind="monotone_1d",
        prefix=(),
        maps=(),
        params=params,
        epsilon_final=params.epsilon,
        bounding_region=Window([lo], [hi]),
        ledger=PlanLedger(travelers=travelers, active=()),
        breakpoints=(src.copy(), tgt.copy()),
    )


def _subsegment_nodes(seg: Segment, eps: float) -> List[np.ndarray]:
    """[a, entry_1, exit_1, ..., entry_k, exit_k, b] along the segment."""
    direction = (seg.b - seg.a) / np.linalg.norm(seg.b - seg.a)
    nodes = [seg.a]
    for c in seg.crossings:
        nodes.append(c.point - (eps / 6.0) * direction)
        nodes.append(c.point + (eps / 6.0) * direction)
    nodes.append(seg.b)
    return nodes


def _build_plan_tubes(
    m: DisplacementMap,
    params: GeneralPositionParams,
    gp: GeneralPosition,
    r_sep: float,
    twists: bool,
) -> HomeoPlan:
    n = len(m)
    eps = gp.epsilon_final
    dim = m.dim

    # subsegments of every active traveler, for clearance computation
    sub_a: List[np.ndarray] = []
    sub_b: List[np.ndarray] = []
    sub_owner: List[int] = []
    seg_nodes: dict[int, List[np.ndarray]] = {}
    for seg in gp.segments:
        nodes = _subsegment_nodes(seg, eps) if twists else [seg.a, seg.b]
        seg_nodes[seg.traveler] = nodes
        for k in range(0, len(nodes), 2):
            sub_a.append(nodes[k])
            sub_b.append(nodes[k + 1])
            sub_owner.append(seg.traveler)
    owner_arr = np.array(sub_owner, dtype=int)
    A = np.array(sub_a) if sub_a else np.empty((0, dim))
    B = np.array(sub_b) if sub_b else np.empty((0, dim))

    rho = _tube_radii(m, gp, params, A, B, owner_arr, twists)

    # emit maps traveler by traveler, threading the exact orbit
    prefix = list(gp.prefix)
    prefix_of = {t: k for k, t in enumerate(gp.prefix_travelers)}
    maps: List[LocalMap] = []
    active: List[int] = list(gp.prefix_travelers)
    offset = len(prefix)

    travelers: List[TravelerLog] = []
    sub_cursor = 0
    seg_by_traveler = {s.traveler: s for s in gp.segments}
    for i in range(n):
        source = m.sources[i].copy()
        target = m.targets[i].copy()
        start = gp.positions[i].copy()
        pmap = prefix_of.get(i, -1)
        if i not in seg_by_traveler:
            travelers.append(
                TravelerLog(
                    index=i,
                    source=source,
                    start=start,
                    target=target,
                    degenerate=True,
                    prefix_map=pmap,
                    journey=(-1, -1),
                    legs=(),
                    waypoints=np.array([source, start, target]),
                    crossings=(),
                )
            )
            continue
        seg = seg_by_traveler[i]
        nodes = seg_nodes[i]
        n_legs = len(nodes) // 2
        legs: List[LegRecord] = []
        first_map = offset + len(maps)
        pos = start.copy()
        for leg in range(n_legs):
            q = nodes[2 * leg + 1]
            leg_rho = rho[sub_cursor]
            waypoints = subdivide(pos, q, leg_rho / 2.0)
            pushes = tube_push(waypoints, leg_rho)
            a_rec = pos.copy()
            start_idx = offset + len(maps)
            maps.extend(pushes)
            active.extend([i] * len(pushes))
            pos = chain_endpoint(pushes)
            legs.append(
                LegRecord(
                    kind="tube",
                    map_start=start_idx,
                    map_end=offset + len(maps),
                    a=a_rec,
                    b=pos.copy(),
                    radius=leg_rho,
                )
            )
            sub_cursor += 1
            if leg < n_legs - 1:
                tw = HalfTwist(center=seg.crossings[leg].point, epsilon=eps)
                idx = offset + len(maps)
                maps.append(tw)
                active.append(i)
                carrier = pos.reshape(1, -1).copy()
                tw.apply_inplace(carrier)
                pos = carrier[0]
                legs.append(
                    LegRecord(
                        kind="twist",
                        map_start=idx,
                        map_end=idx + 1,
                        a=tw.center.copy(),
                        b=tw.center.copy(),
                        radius=tw.support_radius,
                    )
                )
        residual = float(np.linalg.norm(pos - target))
        if residual > TARGET_RESIDUAL_GUARD:
            raise TubeClearanceViolated(
                f"traveler {i} landed {residual:.3g} from its target; construction bug"
            )
        travelers.append(
            TravelerLog(
                index=i,
                source=source,
                start=start,
                target=target,
                degenerate=False,
                prefix_map=pmap,
                journey=(first_map, offset + len(maps)),
                legs=tuple(legs),
                waypoints=np.array([source, start] + nodes[1:]),
                crossings=tuple(c.point.copy() for c in seg.crossings),
            )
        )

    region = _bounding_region(m, eps, r_sep, prefix, maps)
    return HomeoPlan(
        dim=dim,
        kind="local_maps",
        prefix=tuple(prefix),
        maps=tuple(maps),
        params=params,
        epsilon_final=eps,
        bounding_region=region,
        ledger=PlanLedger(travelers=tuple(travelers), active=tuple(active)),
    )


def _tube_radii(
    m: DisplacementMap,
    gp: GeneralPosition,
    params: GeneralPositionParams,
    A: np.ndarray,
    B: np.ndarray,
    owner: np.ndarray,
    twists: bool,
) -> np.ndarray:
    """Per-subsegment tube radius.

    d >= 3: the fixed 0.45 * eps (segments are eps-separated, so tubes are
    disjoint).  d = 2: min(epsilon_prime, clearance/2), clearance being the
    verified distance to every non-incident subsegment and to every resting
    position (other travelers' starts and targets, and degenerate pairs).
    """
    s = A.shape[0]
    if s == 0:
        return np.empty(0)
    if not twists:
        return np.full(s, 0.45 * gp.epsilon_final)

    cutoff = 2.0 * params.epsilon_prime  # beyond this the clearance is moot
    clearance = np.full(s, np.inf)
    if s >= 2:
        ii, jj, d = segment_pairs_below(A, B, cutoff)
        if d.size:
            foreign = owner[ii] != owner[jj]
            np.minimum.at(clearance, ii[foreign], d[foreign])
            np.minimum.at(clearance, jj[foreign], d[foreign])

    # resting positions: every traveler's start and target, degenerate spots
    rest = np.concatenate([gp.positions, m.targets])
    rest_owner = np.concatenate([np.arange(len(m)), np.arange(len(m))])
    pi, si, d = points_vs_segments_below(rest, A, B, cutoff)
    if d.size:
        foreign = rest_owner[pi] != owner[si]
        np.minimum.at(clearance, si[foreign], d[foreign])

    if np.any(clearance <= 0.0):
        raise TubeClearanceViolated("a subsegment has nonpositive clearance")
    return np.minimum(params.epsilon_prime, clearance / 2.0)


def _bounding_region(
    m: DisplacementMap,
    eps: float,
    r_sep: float,
    prefix: Sequence[LocalMap],
    maps: Sequence[LocalMap],
) -> Window:
    pad = m.bound + max(eps, 0.45 * min(r_sep, 1.0))
    if len(m):
        lo = np.minimum(m.sources.min(axis=0), m.targets.min(axis=0)) - pad
        hi = np.maximum(m.sources.max(axis=0), m.targets.max(axis=0)) + pad
    else:
        lo, hi = m.core.lower - pad, m.core.upper + pad
    for mp in list(prefix) + list(maps):
        lo = np.minimum(lo, mp.support_center - mp.support_radius - 1e-9)
        hi = np.maximum(hi, mp.support_center + mp.support_radius + 1e-9)
    return Window(lo, hi)


# --- evaluation --------------------------------------------------------------


def _leg_groups(plan: HomeoPlan):
    """Execution groups: prefix pushes individually, then per-leg slices
    with a capsule prefilter (points beyond the capsule cannot be touched
    by any push of that leg)."""
    allmaps = plan.all_maps()
    groups = []
    for k in range(len(plan.prefix)):
        groups.append(("single", plan.prefix[k : k + 1], None))
    legs = sorted(
        (leg for t in plan.ledger.travelers for leg in t.legs),
        key=lambda leg: leg.map_start,
    )
    for leg in legs:
        sl = allmaps[leg.map_start : leg.map_end]
        if leg.kind == "tube":
            groups.append(("capsule", sl, (leg.a, leg.b, leg.radius + 1e-9)))
        else:
            groups.append(("single", sl, None))
    return groups


def _apply_groups(groups, pts: np.ndarray, inverse: bool) -> None:
    if inverse:
        groups = [(k, s, c) for (k, s, c) in reversed(groups)]
    for kind, maps_slice, capsule in groups:
        if kind == "capsule":
            a, b, r = capsule
            d = point_segment_distance(pts, a[None, :], b[None, :])[:, 0]
            mask = d <= r
            if not mask.any():
                continue
            sub = pts[mask]
            if inverse:
                for mp in reversed(maps_slice):
                    mp.apply_inverse_inplace(sub)
            else:
                for mp in maps_slice:
                    mp.apply_inplace(sub)
            pts[mask] = sub
        else:
            for mp in (reversed(maps_slice) if inverse else maps_slice):
                if inverse:
                    mp.apply_inverse_inplace(pts)
                else:
                    mp.apply_inplace(pts)


def _interp_monotone(x: np.ndarray, xp: np.ndarray, yp: np.ndarray) -> np.ndarray:
    """Piecewise-linear through (xp, yp), slope-1 tails."""
    if len(xp) == 0:
        return x.copy()
    out = np.interp(x, xp, yp)
    lo, hi = xp[0], xp[-1]
    out = np.where(x < lo, x + (yp[0] - lo), out)
    out = np.where(x > hi, x + (yp[-1] - hi), out)
    return out


def evaluate(plan: HomeoPlan, pts) -> np.ndarray:
    """Apply the plan to points (n, d) or a single point (d,).  Pure."""
    arr = np.asarray(pts, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr).copy()
    if plan.kind == "monotone_1d":
        xp, yp = plan.breakpoints
        out = _interp_monotone(arr[:, 0], xp, yp).reshape(-1, 1)
        return out[0] if single else out
    inside = plan.bounding_region.contains(arr)
    if inside.any():
        sub = arr[inside]
        _apply_groups(_leg_groups(plan), sub, inverse=False)
        arr[inside] = sub
    return arr[0] if single else arr


def evaluate_inverse(plan: HomeoPlan, pts) -> np.ndarray:
    """Inverse of ``evaluate``: reversed composition of local inverses."""
    arr = np.asarray(pts, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr).copy()
    if plan.kind == "monotone_1d":
        xp, yp = plan.breakpoints
        out = _interp_monotone(arr[:, 0], yp, xp).reshape(-1, 1)
        return out[0] if single else out
    inside = plan.bounding_region.contains(arr)
    if inside.any():
        sub = arr[inside]
        _apply_groups(_leg_groups(plan), sub, inverse=True)
        arr[inside] = sub
    return arr[0] if single else arr


# --- constants ----------------------------------------------------------------


@lru_cache(maxsize=64)
def _twist_factor(epsilon: float) -> float:
    return HalfTwist(center=np.zeros(2), epsilon=epsilon).lipschitz_factor()


def analytic_constant_bound(plan: HomeoPlan) -> float:
    """Conservative product bound on the bi-Lipschitz constant.

    Product over all maps of max(L_i, 1/l_i); computed in log space, so very
    long plans report inf rather than overflow.  For d = 1 the exact value
    max(max slope, 1/min slope) is returned.
    """
    if plan.kind == "monotone_1d":
        xp, yp = plan.breakpoints
        slopes = [1.0]  # identity tails
        if len(xp) >= 2:
            slopes.extend((np.diff(yp) / np.diff(xp)).tolist())
        return float(max(max(slopes), 1.0 / min(slopes)))
    log_total = 0.0
    for mp in plan.all_maps():
        if isinstance(mp, BallPush):
            log_total += math.log(mp.lipschitz_factor())
        else:
            log_total += math.log(_twist_factor(mp.epsilon))
    try:
        return math.exp(log_total)
    except OverflowError:
        return math.inf


def analytic_log10_bound(plan: HomeoPlan) -> float:
    """log10 of the product bound; finite even when the bound overflows."""
    if plan.kind == "monotone_1d":
        return math.log10(analytic_constant_bound(plan))
    log_total = 0.0
    for mp in plan.all_maps():
        if isinstance(mp, BallPush):
            log_total += math.log10(mp.lipschitz_factor())
        else:
            log_total += math.log10(_twist_factor(mp.epsilon))
    return log_total
