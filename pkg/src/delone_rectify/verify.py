"""Independent verification of a homeomorphism plan.

Checks the exact conclusion (sources land on their lattice targets, one of
each, nothing else claimed), estimates bi-Lipschitz constants by sampled
difference quotients at several scales, confirms the identity outside the
bounding region, exercises the inverse, and replays the ledger to audit the
schedule: while any map is applied, every traveler not being transported
must rest strictly outside its support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Window
from .matching import DisplacementMap
from .rectify import (
    HomeoPlan,
    analytic_constant_bound,
    analytic_log10_bound,
    evaluate,
    evaluate_inverse,
)

DEFAULT_SCALES = (1e-1, 1e-2, 1e-3)


@dataclass(frozen=True)
class RectificationCheck:
    max_target_residual: float
    bijection_ok: bool
    n_pairs: int
    collisions: int
    unmatched_targets: int


def check_rectification(plan: HomeoPlan, m: DisplacementMap, tol: float = 1e-9) -> RectificationCheck:
    """Images of the map's sources, rounded to the nearest lattice point
    within ``tol``, must reproduce the target multiset with no collisions."""
    if len(m) == 0:
        return RectificationCheck(0.0, True, 0, 0, 0)
    images = evaluate(plan, m.sources)
    residual = float(np.max(np.linalg.norm(images - m.targets, axis=1)))
    rounded = np.rint(images)
    near = np.all(np.abs(images - rounded) <= tol, axis=1)
    img_tuples = [tuple(r) for r in rounded.astype(np.int64)]
    tgt_tuples = {tuple(r) for r in np.rint(m.targets).astype(np.int64)}
    collisions = len(img_tuples) - len(set(img_tuples))
    unmatched = len(tgt_tuples - set(img_tuples))
    ok = bool(near.all()) and collisions == 0 and unmatched == 0
    return RectificationCheck(
        max_target_residual=residual,
        bijection_ok=ok,
        n_pairs=len(m),
        collisions=collisions,
        unmatched_targets=unmatched,
    )


def estimate_bilipschitz(
    plan: HomeoPlan,
    region: Window,
    n: int,
    scales: Sequence[float] = DEFAULT_SCALES,
    seed: int = 0,
    bins: int = 20,
) -> Tuple[float, float, Dict[float, Tuple[Tuple[int, ...], Tuple[float, ...]]]]:
    """Sampled difference quotients |F(u + h e) - F(u)| / h over random base
    points and unit directions, at each scale h.

    Returns (upper, lower, per-scale histogram).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    dim = region.dim
    base = rng.uniform(region.lower, region.upper, size=(n, dim))
    dirs = rng.normal(size=(n, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    upper, lower = -np.inf, np.inf
    hists: Dict[float, Tuple[Tuple[int, ...], Tuple[float, ...]]] = {}
    f_base = evaluate(plan, base)
    for h in scales:
        f_step = evaluate(plan, base + h * dirs)
        q = np.linalg.norm(f_step - f_base, axis=1) / h
        upper = max(upper, float(q.max()))
        lower = min(lower, float(q.min()))
        counts, edges = np.histogram(q, bins=bins)
        hists[float(h)] = (tuple(int(c) for c in counts), tuple(float(e) for e in edges))
    return upper, lower, hists


def check_identity_outside(
    plan: HomeoPlan, n: int, seed: int = 0, shell: float = 0.5
) -> Tuple[bool, float]:
    """Sample points outside the bounding region (in a surrounding shell);
    the plan must fix them exactly."""
    rng = np.random.default_rng(seed)
    region = plan.bounding_region
    pad = shell * float(np.max(region.extent)) + 1.0
    outer = region.inflate(pad)
    pts = []
    needed = n
    while needed > 0:
        cand = rng.uniform(outer.lower, outer.upper, size=(max(2 * needed, 64), region.dim))
        keep = ~region.contains(cand)
        pts.append(cand[keep][:needed])
        needed -= len(pts[-1])
    sample = np.concatenate(pts)
    out = evaluate(plan, sample)
    dev = float(np.max(np.abs(out - sample))) if len(sample) else 0.0
    return dev == 0.0, dev


def roundtrip_error(plan: HomeoPlan, region: Window, n: int, seed: int = 0) -> float:
    """max |F(F^-1(y)) - y| over n uniform samples of the region."""
    rng = np.random.default_rng(seed)
    ys = rng.uniform(region.lower, region.upper, size=(n, region.dim))
    back = evaluate(plan, evaluate_inverse(plan, ys))
    return float(np.max(np.linalg.norm(back - ys, axis=1)))


def jacobian_determinants(fn, pts: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian determinants of a map or plan at each
    point; ``fn`` is a HomeoPlan or any (n, d) -> (n, d) callable."""
    if isinstance(fn, HomeoPlan):
        plan = fn
        fn = lambda p: evaluate(plan, p)  # noqa: E731
    pts = np.atleast_2d(pts)
    n, d = pts.shape
    cols = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        cols.append((fn(pts + e) - fn(pts - e)) / (2 * h))
    jac = np.stack(cols, axis=2)  # (n, d, d); column k = dF/dx_k
    return np.linalg.det(jac)


# --- schedule audit -----------------------------------------------------------


@dataclass(frozen=True)
class AuditResult:
    checks: int
    violations: int
    first_violation: Optional[Tuple[int, int, float]] = None  # (map idx, traveler, dist)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def audit_schedule(plan: HomeoPlan) -> AuditResult:
    """Replay the ledger: when map k fires, every traveler other than the
    active one must rest strictly outside the map's support.

    Resting positions are exact by construction: the original source before
    the traveler's perturbation push, the perturbed start before its journey,
    and the target afterwards.
    """
    if plan.kind == "monotone_1d" or plan.n_maps == 0:
        return AuditResult(checks=0, violations=0)
    travelers = plan.ledger.travelers
    n = len(travelers)
    sources = np.array([t.source for t in travelers])
    starts = np.array([t.start for t in travelers])
    targets = np.array([t.target for t in travelers])
    prefix_idx = np.array([t.prefix_map for t in travelers])
    j_start = np.array([t.journey[0] for t in travelers])
    j_end = np.array([t.journey[1] for t in travelers])

    allmaps = plan.all_maps()
    active = plan.ledger.active
    checks = 0
    violations = 0
    first: Optional[Tuple[int, int, float]] = None
    has_prefix = prefix_idx >= 0
    has_journey = j_start >= 0
    for k, mp in enumerate(allmaps):
        center = mp.support_center
        radius = mp.support_radius
        # resting position at time k: source until own prefix push fires,
        # then start until the journey completes, then target (a traveler is
        # never checked against its own journey maps)
        use_source = has_prefix & (k <= prefix_idx)
        use_target = has_journey & (k >= j_end)
        pos = np.where(use_source[:, None], sources, np.where(use_target[:, None], targets, starts))
        d = np.linalg.norm(pos - center, axis=1)
        mask = np.ones(n, dtype=bool)
        mask[active[k]] = False
        checks += int(mask.sum())
        bad = mask & (d <= radius)
        if bad.any():
            violations += int(bad.sum())
            if first is None:
                t_bad = int(np.nonzero(bad)[0][0])
                first = (k, t_bad, float(d[t_bad]))
    return AuditResult(checks=checks, violations=violations, first_violation=first)


# --- assembled report ----------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    max_target_residual: float
    bijection_ok: bool
    lipschitz_upper_est: float
    lipschitz_lower_est: float
    analytic_bound: float
    analytic_log10_bound: float
    identity_outside_ok: bool
    identity_outside_dev: float
    roundtrip_max: float
    samples_used: int
    seed: int
    scales: Tuple[float, ...]
    tolerance: float
    histograms: Dict[float, Tuple[Tuple[int, ...], Tuple[float, ...]]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(
            self.bijection_ok
            and self.identity_outside_ok
            and self.max_target_residual <= self.tolerance
            and self.roundtrip_max <= self.tolerance
            and self.lipschitz_upper_est <= self.analytic_bound * (1 + 1e-9)
        )


def verify_plan(
    plan: HomeoPlan,
    m: DisplacementMap,
    samples: int = 10_000,
    seed: int = 0,
    scales: Sequence[float] = DEFAULT_SCALES,
    tolerance: float = 1e-9,
) -> VerificationReport:
    """Run the full battery against the Lemma's conclusion."""
    rect = check_rectification(plan, m, tol=tolerance)
    region = plan.bounding_region
    lip_n = max(1, samples // 5)
    upper, lower, hists = estimate_bilipschitz(plan, region, lip_n, scales=scales, seed=seed)
    ident_ok, dev = check_identity_outside(plan, samples, seed=seed + 1)
    rt = roundtrip_error(plan, region, samples, seed=seed + 2)
    return VerificationReport(
        max_target_residual=rect.max_target_residual,
        bijection_ok=rect.bijection_ok,
        lipschitz_upper_est=upper,
        lipschitz_lower_est=lower,
        analytic_bound=analytic_constant_bound(plan),
        analytic_log10_bound=analytic_log10_bound(plan),
        identity_outside_ok=ident_ok,
        identity_outside_dev=dev,
        roundtrip_max=rt,
        samples_used=samples,
        seed=seed,
        scales=tuple(float(s) for s in scales),
        tolerance=tolerance,
        histograms=hists,
    )
