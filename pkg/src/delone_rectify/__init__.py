"""Bi-Lipschitz rectification of boundedly displaced Delone sets onto the
integer lattice: generators, bottleneck matching, explicit homeomorphism
plans, verification, and rendering."""

from .geometry import (
    DeloneConstants,
    GridIndex,
    PointSet,
    Window,
    build_point_set,
    delone_constants,
    lattice_points,
    min_pairwise_distance,
)
from .patches import Patch, ProfileEntry, find_translated_copy, patch_at, repetitivity_profile
from .generators import (
    GeneratorSpec,
    SourceCorrespondence,
    chair_vertices,
    fibonacci_projection,
    generate,
)
from .matching import BdReport, DisplacementMap, bottleneck_match, verify_bd
from .localmaps import BallPush, HalfTwist, ball_push, chain_endpoint, half_twist, subdivide, tube_push
from .general_position import (
    GeneralPosition,
    GeneralPositionParams,
    Segment,
    perturb_general_position,
)
from .rectify import (
    HomeoPlan,
    analytic_constant_bound,
    analytic_log10_bound,
    build_plan,
    evaluate,
    evaluate_inverse,
    plan_for_map,
)
from .verify import (
    AuditResult,
    VerificationReport,
    audit_schedule,
    check_identity_outside,
    check_rectification,
    estimate_bilipschitz,
    jacobian_determinants,
    roundtrip_error,
    verify_plan,
)
from .render import RenderStyle, SceneDescription, render_scene

__all__ = [
    "DeloneConstants",
    "GridIndex",
    "PointSet",
    "Window",
    "build_point_set",
    "delone_constants",
    "lattice_points",
    "min_pairwise_distance",
    "Patch",
    "ProfileEntry",
    "find_translated_copy",
    "patch_at",
    "repetitivity_profile",
    "GeneratorSpec",
    "SourceCorrespondence",
    "chair_vertices",
    "fibonacci_projection",
    "generate",
    "BdReport",
    "DisplacementMap",
    "bottleneck_match",
    "verify_bd",
    "BallPush",
    "HalfTwist",
    "ball_push",
    "chain_endpoint",
    "half_twist",
    "subdivide",
    "tube_push",
    "GeneralPosition",
    "GeneralPositionParams",
    "Segment",
    "perturb_general_position",
    "HomeoPlan",
    "analytic_constant_bound",
    "analytic_log10_bound",
    "build_plan",
    "evaluate",
    "evaluate_inverse",
    "plan_for_map",
    "AuditResult",
    "VerificationReport",
    "audit_schedule",
    "check_identity_outside",
    "check_rectification",
    "estimate_bilipschitz",
    "jacobian_determinants",
    "roundtrip_error",
    "verify_plan",
    "RenderStyle",
    "SceneDescription",
    "render_scene",
]
