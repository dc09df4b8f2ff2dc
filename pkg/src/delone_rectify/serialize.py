"""JSON and CSV serialization of every pipeline artifact.

All formats are plain text.  Floats go through Python's repr (shortest
round-trip decimal), so write-then-read reproduces values bit for bit; CSV
uses 17 significant digits for the same guarantee.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .errors import InvalidSpec
from .general_position import GeneralPositionParams
from .generators import GeneratorSpec, SourceCorrespondence
from .geometry import PointSet, Window, build_point_set
from .localmaps import BallPush, HalfTwist, LocalMap
from .matching import DisplacementMap
from .rectify import HomeoPlan, LegRecord, PlanLedger, TravelerLog
from .verify import VerificationReport


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


# --- windows and point sets -------------------------------------------------


def window_to_json(w: Window) -> Dict[str, Any]:
    return {"lower": _floats(w.lower), "upper": _floats(w.upper)}


def window_from_json(d: Dict[str, Any]) -> Window:
    return Window(d["lower"], d["upper"])


def point_set_to_json(s: PointSet) -> Dict[str, Any]:
    return {
        "dim": s.dim,
        "window": window_to_json(s.window),
        "points": [_floats(p) for p in s.points],
    }


def point_set_from_json(d: Dict[str, Any], cell_size: float = 1.0) -> PointSet:
    window = window_from_json(d["window"])
    if d["dim"] != window.dim:
        raise InvalidSpec(f"dim {d['dim']} does not match window dim {window.dim}")
    pts = np.array(d["points"], dtype=float).reshape(-1, window.dim)
    return build_point_set(pts, window, cell_size)


def point_set_to_csv(s: PointSet) -> str:
    rows = [",".join(f"{x:.17g}" for x in p) for p in s.points]
    return "\n".join(rows) + ("\n" if rows else "")


def points_from_csv(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line.strip()]
    return np.array([[float(x) for x in line.split(",")] for line in rows])


# --- generator specs -----------------------------------------------------------

_SPEC_KEYS = {"kind", "dim", "window", "delta", "seed", "iterations"}


def generator_spec_to_json(spec: GeneratorSpec) -> Dict[str, Any]:
    return {
        "kind": spec.kind,
        "dim": spec.dim,
        "window": window_to_json(spec.window),
        "delta": spec.delta,
        "seed": spec.seed,
        "iterations": spec.iterations,
    }


def generator_spec_from_json(d: Dict[str, Any]) -> GeneratorSpec:
    unknown = set(d) - _SPEC_KEYS
    if unknown:
        raise InvalidSpec(f"unknown generator spec keys: {sorted(unknown)}")
    for key in ("kind", "dim", "window"):
        if key not in d:
            raise InvalidSpec(f"generator spec missing {key!r}")
    spec = GeneratorSpec(
        kind=d["kind"],
        dim=int(d["dim"]),
        window=window_from_json(d["window"]),
        delta=float(d.get("delta", 0.0)),
        seed=int(d.get("seed", 0)),
        iterations=int(d.get("iterations", 1)),
    )
    spec.validate()
    return spec


def correspondence_to_json(c: SourceCorrespondence) -> Dict[str, Any]:
    return {
        "lattice": [_floats(p) for p in c.lattice],
        "points": [_floats(p) for p in c.points],
        "max_displacement": c.max_displacement,
    }


# --- displacement maps -----------------------------------------------------------


def displacement_map_to_json(m: DisplacementMap) -> Dict[str, Any]:
    return {
        "bound": m.bound,
        "core": window_to_json(m.core),
        "pairs": [[_floats(s), _floats(t)] for s, t in zip(m.sources, m.targets)],
    }


def displacement_map_from_json(d: Dict[str, Any]) -> DisplacementMap:
    core = window_from_json(d["core"])
    pairs = d["pairs"]
    src = np.array([p[0] for p in pairs], dtype=float).reshape(-1, core.dim)
    tgt = np.array([p[1] for p in pairs], dtype=float).reshape(-1, core.dim)
    return DisplacementMap(sources=src, targets=tgt, bound=float(d["bound"]), core=core)


# --- general position params ---------------------------------------------------


def params_to_json(p: GeneralPositionParams) -> Dict[str, Any]:
    return {
        "epsilon": p.epsilon,
        "epsilon_prime": p.epsilon_prime,
        "delta": p.delta,
        "seed": p.seed,
        "max_retries": p.max_retries,
        "epsilon_floor": p.epsilon_floor,
    }


def params_from_json(d: Dict[str, Any]) -> GeneralPositionParams:
    return GeneralPositionParams(
        epsilon=float(d["epsilon"]),
        epsilon_prime=float(d["epsilon_prime"]),
        delta=float(d["delta"]),
        seed=int(d.get("seed", 0)),
        max_retries=int(d.get("max_retries", 30)),
        epsilon_floor=float(d.get("epsilon_floor", 1e-3)),
    )


# --- local maps and plans ---------------------------------------------------------


def local_map_to_json(mp: LocalMap) -> Dict[str, Any]:
    if isinstance(mp, BallPush):
        return {
            "type": "ball_push",
            "center": _floats(mp.center),
            "radius": mp.radius,
            "offset": _floats(mp.offset),
        }
    return {"type": "half_twist", "center": _floats(mp.center), "epsilon": mp.epsilon}


def local_map_from_json(d: Dict[str, Any]) -> LocalMap:
    if d["type"] == "ball_push":
        return BallPush(
            center=np.array(d["center"], dtype=float),
            radius=float(d["radius"]),
            offset=np.array(d["offset"], dtype=float),
        )
    if d["type"] == "half_twist":
        return HalfTwist(center=np.array(d["center"], dtype=float), epsilon=float(d["epsilon"]))
    raise ValueError(f"unknown local map type {d['type']!r}")


def _leg_to_json(leg: LegRecord) -> Dict[str, Any]:
    return {
        "kind": leg.kind,
        "map_start": leg.map_start,
        "map_end": leg.map_end,
        "a": _floats(leg.a),
        "b": _floats(leg.b),
        "radius": leg.radius,
    }


def _leg_from_json(d: Dict[str, Any]) -> LegRecord:
    return LegRecord(
        kind=d["kind"],
        map_start=int(d["map_start"]),
        map_end=int(d["map_end"]),
        a=np.array(d["a"], dtype=float),
        b=np.array(d["b"], dtype=float),
        radius=float(d["radius"]),
    )


def _traveler_to_json(t: TravelerLog) -> Dict[str, Any]:
    return {
        "index": t.index,
        "source": _floats(t.source),
        "start": _floats(t.start),
        "target": _floats(t.target),
        "degenerate": t.degenerate,
        "prefix_map": t.prefix_map,
        "journey": list(t.journey),
        "legs": [_leg_to_json(leg) for leg in t.legs],
        "waypoints": [_floats(w) for w in t.waypoints],
        "crossings": [_floats(c) for c in t.crossings],
    }


def _traveler_from_json(d: Dict[str, Any]) -> TravelerLog:
    return TravelerLog(
        index=int(d["index"]),
        source=np.array(d["source"], dtype=float),
        start=np.array(d["start"], dtype=float),
        target=np.array(d["target"], dtype=float),
        degenerate=bool(d["degenerate"]),
        prefix_map=int(d["prefix_map"]),
        journey=(int(d["journey"][0]), int(d["journey"][1])),
        legs=tuple(_leg_from_json(x) for x in d["legs"]),
        waypoints=np.array(d["waypoints"], dtype=float),
        crossings=tuple(np.array(c, dtype=float) for c in d["crossings"]),
    )


def plan_to_json(plan: HomeoPlan) -> Dict[str, Any]:
    out = {
        "dim": plan.dim,
        "kind": plan.kind,
        "epsilon_final": plan.epsilon_final,
        "params": params_to_json(plan.params),
        "bounding_region": window_to_json(plan.bounding_region),
        "prefix": [local_map_to_json(mp) for mp in plan.prefix],
        "maps": [local_map_to_json(mp) for mp in plan.maps],
        "ledger": {
            "travelers": [_traveler_to_json(t) for t in plan.ledger.travelers],
            "active": list(plan.ledger.active),
        },
    }
    if plan.breakpoints is not None:
        out["breakpoints"] = {
            "sources": _floats(plan.breakpoints[0]),
            "targets": _floats(plan.breakpoints[1]),
        }
    return out


def plan_from_json(d: Dict[str, Any]) -> HomeoPlan:
    breakpoints = None
    if "breakpoints" in d and d["breakpoints"] is not None:
        breakpoints = (
            np.array(d["breakpoints"]["sources"], dtype=float),
            np.array(d["breakpoints"]["targets"], dtype=float),
        )
    return HomeoPlan(
        dim=int(d["dim"]),
        kind=d["kind"],
        prefix=tuple(local_map_from_json(x) for x in d["prefix"]),
        maps=tuple(local_map_from_json(x) for x in d["maps"]),
        params=params_from_json(d["params"]),
        epsilon_final=float(d["epsilon_final"]),
        bounding_region=window_from_json(d["bounding_region"]),
        ledger=PlanLedger(
            travelers=tuple(_traveler_from_json(t) for t in d["ledger"]["travelers"]),
            active=tuple(int(a) for a in d["ledger"]["active"]),
        ),
        breakpoints=breakpoints,
    )


# --- verification reports ---------------------------------------------------------


def report_to_json(r: VerificationReport) -> Dict[str, Any]:
    return {
        "ok": r.ok,
        "max_target_residual": r.max_target_residual,
        "bijection_ok": r.bijection_ok,
        "lipschitz_upper_est": r.lipschitz_upper_est,
        "lipschitz_lower_est": r.lipschitz_lower_est,
        "analytic_bound": r.analytic_bound if np.isfinite(r.analytic_bound) else None,
        "analytic_log10_bound": r.analytic_log10_bound,
        "identity_outside_ok": r.identity_outside_ok,
        "identity_outside_dev": r.identity_outside_dev,
        "roundtrip_max": r.roundtrip_max,
        "samples_used": r.samples_used,
        "seed": r.seed,
        "scales": list(r.scales),
        "tolerance": r.tolerance,
        "histograms": [
            {"scale": h, "counts": list(c), "edges": list(e)}
            for h, (c, e) in sorted(r.histograms.items())
        ],
    }


# --- files -------------------------------------------------------------------------


def write_json(path: Union[str, Path], obj: Dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(obj, indent=1) + "\n", encoding="utf-8")


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
