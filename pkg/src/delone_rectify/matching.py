"""Bottleneck matching of a point-set window onto integer lattice points.

The matcher realizes, on finite data, the hypothesis "boundedly displaced
image of the lattice": it finds the smallest threshold c at which a matching
exists that saturates both the points of the margin-shrunk core and the
lattice points of that core (pools on both sides extend to the full window,
which removes edge starvation).  The optimum is exact because only realized
point-lattice distances are candidate thresholds.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateWindow, EmptyCore, Infeasible
from .geometry import PointSet, Window, lattice_points

INTEGRALITY_TOL = 1e-12


@dataclass(frozen=True)
class DisplacementMap:
    """A bijection fragment: distinct sources paired with distinct integer
    targets, its exact sup displacement, and the core window on which the
    pairing is certified total (both directions)."""

    sources: np.ndarray  # (n, d)
    targets: np.ndarray  # (n, d), integer-valued
    bound: float
    core: Window

    def __post_init__(self):
        src = np.atleast_2d(np.asarray(self.sources, dtype=float))
        tgt = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if src.size == 0:
            src = src.reshape(0, self.core.dim)
            tgt = tgt.reshape(0, self.core.dim)
        if src.shape != tgt.shape or src.shape[1] != self.core.dim:
            raise ValueError("sources/targets shape mismatch")
        if np.any(np.abs(tgt - np.rint(tgt)) > INTEGRALITY_TOL):
            raise ValueError("targets must have integer coordinates")
        if len({tuple(row) for row in src}) != len(src):
            raise ValueError("sources must be pairwise distinct")
        if len({tuple(row) for row in np.rint(tgt).astype(np.int64)}) != len(tgt):
            raise ValueError("targets must be pairwise distinct")
        recomputed = float(np.max(np.linalg.norm(src - tgt, axis=1))) if len(src) else 0.0
        if abs(recomputed - self.bound) > 1e-9:
            raise ValueError(f"bound {self.bound} != max displacement {recomputed}")
        src.flags.writeable = False
        tgt.flags.writeable = False
        object.__setattr__(self, "sources", src)
        object.__setattr__(self, "targets", tgt)
        object.__setattr__(self, "bound", recomputed)

    @property
    def dim(self) -> int:
        return self.core.dim

    def __len__(self) -> int:
        return self.sources.shape[0]


def _hopcroft_karp(adj: List[List[int]], n_right: int) -> Tuple[int, List[int]]:
    """Maximum matching on a bipartite graph given as left adjacency lists.

    Returns (matching size, match_left) with match_left[i] = right index or -1.
    Iterative Hopcroft-Karp; result size is canonical, the matching itself
    depends only on adjacency order (deterministic).
    """
    n_left = len(adj)
    INF = math.inf
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    size = 0
    while True:
        dist = [INF] * n_left
        q = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                q.append(u)
        reachable_free = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    reachable_free = True
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    q.append(w)
        if not reachable_free:
            break
        # iterative DFS for augmenting paths along the level graph
        it = [0] * n_left
        for s in range(n_left):
            if match_l[s] != -1:
                continue
            stack = [s]
            path: List[Tuple[int, int]] = []
            while stack:
                u = stack[-1]
                advanced = False
                while it[u] < len(adj[u]):
                    v = adj[u][it[u]]
                    it[u] += 1
                    w = match_r[v]
                    if w == -1:
                        path.append((u, v))
                        for uu, vv in path:
                            match_l[uu] = vv
                            match_r[vv] = uu
                        size += 1
                        stack.clear()
                        path.clear()
                        advanced = True
                        break
                    if dist[w] == dist[u] + 1:
                        path.append((u, v))
                        stack.append(w)
                        advanced = True
                        break
                if not advanced:
                    dist[u] = INF
                    stack.pop()
                    if path:
                        path.pop()
        if size == min(n_left, n_right):
            break
    return size, match_l


def _saturating_matching(
    adj: List[List[int]],
    n_right: int,
    required_left: Sequence[int],
    required_right: Sequence[int],
) -> Optional[Dict[int, int]]:
    """Matching saturating both required sides, or None.

    Feasibility per side is a Hopcroft-Karp run restricted to that side's
    required vertices; the two matchings are merged Mendelsohn-Dulmage style
    (alternating-path surgery keeps the left side saturated while adopting
    the right cover).
    """
    req_l = list(required_left)
    req_r = set(required_right)

    sub_adj = [adj[u] for u in req_l]
    size_l, match_sub = _hopcroft_karp(sub_adj, n_right)
    if size_l < len(req_l):
        return None
    match: Dict[int, int] = {req_l[k]: v for k, v in enumerate(match_sub) if v != -1}

    radj: List[List[int]] = [[] for _ in range(n_right)]
    for u, vs in enumerate(adj):
        for v in vs:
            radj[v].append(u)
    req_r_list = sorted(req_r)
    sub_radj = [radj[v] for v in req_r_list]
    size_r, match_sub_r = _hopcroft_karp(sub_radj, len(adj))
    if size_r < len(req_r_list):
        return None
    match_t: Dict[int, int] = {
        req_r_list[k]: u for k, u in enumerate(match_sub_r) if u != -1
    }  # right -> left, saturates required right

    owner: Dict[int, int] = {v: u for u, v in match.items()}
    for t0 in req_r_list:
        if t0 in owner:
            continue
        # alternating walk: M_T edge into t, displace the current M edge, repeat
        t = t0
        while True:
            u = match_t.get(t)
            if u is None:
                break  # t not required (never happens for t0 itself after first step)
            prev = match.get(u)
            match[u] = t
            owner[t] = u
            if prev is None:
                break
            del owner[prev]  # prev lost its partner; continue the walk from it
            t = prev
            if t not in match_t:
                break
    if any(u not in match for u in req_l) or any(t not in owner for t in req_r):
        return None  # cannot happen per Mendelsohn-Dulmage; guard anyway
    return match


def _candidate_edges(
    points: np.ndarray, lattice: np.ndarray, cap: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(left_idx, right_idx, dist) for all point-lattice pairs with
    dist <= cap."""
    tree = cKDTree(lattice)
    hits = tree.query_ball_point(points, cap)
    counts = [len(h) for h in hits]
    li = np.repeat(np.arange(len(points), dtype=np.int64), counts)
    ri = (
        np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])
        if li.size
        else np.empty(0, dtype=np.int64)
    )
    diff = points[li] - lattice[ri]
    dd = np.sqrt(np.einsum("kd,kd->k", diff, diff)) if li.size else np.empty(0)
    return li, ri, dd


def bottleneck_match(
    s: PointSet, margin: float, order_preserving: bool = False
) -> DisplacementMap:
    """Minimize the maximum displacement of a matching that saturates the
    core points and the core lattice simultaneously.

    Binary search over realized point-lattice distances, with a saturating
    matching as the feasibility oracle.  ``order_preserving`` (d = 1 only)
    instead pairs the i-th smallest core point with the i-th smallest core
    lattice point, which is what the one-dimensional rectifier needs.
    """
    try:
        core = s.window.shrink(margin)
    except DegenerateWindow as e:
        raise EmptyCore(str(e)) from e

    if order_preserving:
        if s.dim != 1:
            raise ValueError("order_preserving matching is defined for d = 1 only")
        src = np.sort(s.points[core.contains(s.points)], axis=0)
        lat = lattice_points(core)
        if len(src) == 0:
            raise EmptyCore("no points in the margin-shrunk core")
        if len(lat) < len(src):
            raise Infeasible(f"{len(src)} core points but only {len(lat)} core lattice points")
        tgt = lat[: len(src)]
        bound = float(np.max(np.abs(src - tgt))) if len(src) else 0.0
        return DisplacementMap(sources=src, targets=tgt, bound=bound, core=core)

    pool_left = s.points
    pool_right = lattice_points(s.window)
    req_left = np.nonzero(core.contains(pool_left))[0]
    req_right = np.nonzero(core.contains(pool_right))[0]
    if req_left.size == 0 and req_right.size == 0:
        raise EmptyCore("margin-shrunk core contains neither points nor lattice points")
    if req_left.size > len(pool_right) or req_right.size > len(pool_left):
        raise Infeasible(
            f"count mismatch: {req_left.size} core points vs {len(pool_right)} lattice "
            f"candidates, {req_right.size} core lattice points vs {len(pool_left)} points"
        )

    diameter = s.window.diameter
    cap = max(1.0, 2.0 * margin)
    edges = None
    feasible_cap = None
    while True:
        li, ri, dd = _candidate_edges(pool_left, pool_right, cap)
        adj = _adjacency(li, ri, dd, len(pool_left), threshold=cap)
        if _saturating_matching(adj, len(pool_right), req_left, req_right) is not None:
            edges = (li, ri, dd)
            feasible_cap = cap
            break
        if cap >= diameter:
            raise Infeasible(
                f"no saturating matching exists even at the window diameter {diameter:.3g}"
            )
        cap = min(cap * 2.0, diameter)

    li, ri, dd = edges
    values = np.unique(dd)
    lo, hi = 0, len(values) - 1  # values[hi] = feasible_cap level is feasible
    while lo < hi:
        mid = (lo + hi) // 2
        adj = _adjacency(li, ri, dd, len(pool_left), threshold=float(values[mid]))
        if _saturating_matching(adj, len(pool_right), req_left, req_right) is not None:
            hi = mid
        else:
            lo = mid + 1
    c_star = float(values[lo])
    adj = _adjacency(li, ri, dd, len(pool_left), threshold=c_star)
    match = _saturating_matching(adj, len(pool_right), req_left, req_right)
    assert match is not None

    items = sorted(match.items())
    src = pool_left[[u for u, _ in items]]
    tgt = pool_right[[v for _, v in items]]
    order = np.lexsort(src.T[::-1])
    src, tgt = src[order], tgt[order]
    bound = float(np.max(np.linalg.norm(src - tgt, axis=1))) if len(src) else 0.0
    return DisplacementMap(sources=src, targets=tgt, bound=bound, core=core)


def _adjacency(
    li: np.ndarray, ri: np.ndarray, dd: np.ndarray, n_left: int, threshold: float
) -> List[List[int]]:
    adj: List[List[int]] = [[] for _ in range(n_left)]
    keep = dd <= threshold
    for u, v in zip(li[keep], ri[keep]):
        adj[u].append(int(v))
    return adj


@dataclass(frozen=True)
class BdReport:
    """Recheck of a displacement map against a claimed bound."""

    max_displacement: float
    claimed: float
    passed: bool
    histogram_counts: Tuple[int, ...]
    histogram_edges: Tuple[float, ...]
    targets_integral: bool
    targets_distinct: bool
    sources_distinct: bool
    n_pairs: int


def verify_bd(m: DisplacementMap, claimed: float, bins: int = 20) -> BdReport:
    """Recompute displacements and structural invariants of ``m``."""
    if len(m) == 0:
        disp = np.zeros(0)
    else:
        disp = np.linalg.norm(m.sources - m.targets, axis=1)
    max_disp = float(disp.max()) if disp.size else 0.0
    hist_hi = max(max_disp, claimed, 1e-12)
    counts, edges = np.histogram(disp, bins=bins, range=(0.0, hist_hi))
    integral = bool(np.all(np.abs(m.targets - np.rint(m.targets)) <= INTEGRALITY_TOL))
    t_distinct = len({tuple(r) for r in np.rint(m.targets).astype(np.int64)}) == len(m)
    s_distinct = len({tuple(r) for r in m.sources}) == len(m)
    return BdReport(
        max_displacement=max_disp,
        claimed=float(claimed),
        passed=bool(max_disp <= claimed and integral and t_distinct and s_distinct),
        histogram_counts=tuple(int(c) for c in counts),
        histogram_edges=tuple(float(e) for e in edges),
        targets_integral=integral,
        targets_distinct=t_distinct,
        sources_distinct=s_distinct,
        n_pairs=len(m),
    )
