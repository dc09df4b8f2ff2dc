"""Pydantic request/response schemas for the service.

The models mirror the on-disk JSON formats exactly, so conversion to and
from core objects goes through the same functions as file I/O.  Unknown
keys are rejected everywhere.
"""

from __future__ import annotations

from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WindowModel(StrictModel):
    lower: List[float]
    upper: List[float]


class GeneratorSpecModel(StrictModel):
    kind: Literal["lattice", "perturbed_lattice", "fibonacci_1d", "chair_vertices"]
    dim: int
    window: WindowModel
    delta: float = 0.0
    seed: int = 0
    iterations: int = 1


class PointSetModel(StrictModel):
    dim: int
    window: WindowModel
    points: List[List[float]]


class CorrespondenceModel(StrictModel):
    lattice: List[List[float]]
    points: List[List[float]]
    max_displacement: float


class DisplacementMapModel(StrictModel):
    bound: float
    core: WindowModel
    pairs: List[Tuple[List[float], List[float]]]


class ParamsModel(StrictModel):
    """General-position parameters; leave fields unset to derive them from
    the separation of the map's sources."""

    epsilon: Optional[float] = None
    epsilon_prime: Optional[float] = None
    delta: Optional[float] = None
    seed: int = 0
    max_retries: int = 30
    epsilon_floor: float = 1e-3


class BallPushModel(StrictModel):
    type: Literal["ball_push"]
    center: List[float]
    radius: float
    offset: List[float]


class HalfTwistModel(StrictModel):
    type: Literal["half_twist"]
    center: List[float]
    epsilon: float


LocalMapModel = Annotated[Union[BallPushModel, HalfTwistModel], Field(discriminator="type")]


class LegModel(StrictModel):
    kind: Literal["tube", "twist"]
    map_start: int
    map_end: int
    a: List[float]
    b: List[float]
    radius: float


class TravelerModel(StrictModel):
    index: int
    source: List[float]
    start: List[float]
    target: List[float]
    degenerate: bool
    prefix_map: int
    journey: List[int]
    legs: List[LegModel]
    waypoints: List[List[float]]
    crossings: List[List[float]]


class LedgerModel(StrictModel):
    travelers: List[TravelerModel]
    active: List[int]


class BreakpointsModel(StrictModel):
    sources: List[float]
    targets: List[float]


class ResolvedParamsModel(StrictModel):
    epsilon: float
    epsilon_prime: float
    delta: float
    seed: int = 0
    max_retries: int = 30
    epsilon_floor: float = 1e-3


class PlanModel(StrictModel):
    dim: int
    kind: Literal["local_maps", "monotone_1d"]
    epsilon_final: float
    params: ResolvedParamsModel
    bounding_region: WindowModel
    prefix: List[LocalMapModel]
    maps: List[LocalMapModel]
    ledger: LedgerModel
    breakpoints: Optional[BreakpointsModel] = None


class HistogramModel(StrictModel):
    scale: float
    counts: List[int]
    edges: List[float]


class ReportModel(StrictModel):
    ok: bool
    max_target_residual: float
    bijection_ok: bool
    lipschitz_upper_est: float
    lipschitz_lower_est: float
    analytic_bound: Optional[float] = None  # None when the product overflows
    analytic_log10_bound: float
    identity_outside_ok: bool
    identity_outside_dev: float
    roundtrip_max: float
    samples_used: int
    seed: int
    scales: List[float]
    tolerance: float
    histograms: List[HistogramModel]


class AuditModel(StrictModel):
    ok: bool
    checks: int
    violations: int
    first_violation: Optional[List[float]] = None


class StyleModel(StrictModel):
    scale: float = 24.0
    padding: float = 1.0
    grid_step: float = 1.0
    grid_color: str = "#9ecae1"
    grid_width: float = 0.02
    tube_color: str = "#fdd0a2"
    tube_opacity: float = 0.55
    path_color: str = "#6a51a3"
    path_width: float = 0.03
    twist_outer_color: str = "#d94801"
    twist_inner_color: str = "#fd8d3c"
    twist_width: float = 0.025
    source_color: str = "#238b45"
    source_radius: float = 0.09
    target_color: str = "#cb181d"
    target_half: float = 0.08
    decimals: int = 6


# --- request / response wrappers ---------------------------------------------


class GenRequest(StrictModel):
    spec: GeneratorSpecModel


class GenResponse(StrictModel):
    points: PointSetModel
    correspondence: Optional[CorrespondenceModel] = None


class MatchRequest(StrictModel):
    points: PointSetModel
    margin: float
    order_preserving: bool = False


class RectifyRequest(StrictModel):
    map: DisplacementMapModel
    params: ParamsModel = Field(default_factory=ParamsModel)


class RectifyResponse(StrictModel):
    plan: PlanModel
    n_maps: int
    n_twists: int
    epsilon_final: float
    r_sep: Optional[float] = None


class VerifyRequest(StrictModel):
    plan: PlanModel
    map: DisplacementMapModel
    samples: int = 10_000
    seed: int = 0
    scales: List[float] = Field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    tolerance: float = 1e-9
    audit: bool = True


class VerifyResponse(StrictModel):
    report: ReportModel
    audit: Optional[AuditModel] = None
    ok: bool


class RenderRequest(StrictModel):
    plan: PlanModel
    map: DisplacementMapModel
    style: StyleModel = Field(default_factory=StyleModel)


class EvaluateRequest(StrictModel):
    plan: PlanModel
    points: List[List[float]]
    inverse: bool = False


class EvaluateResponse(StrictModel):
    images: List[List[float]]


class PipelineRequest(StrictModel):
    spec: GeneratorSpecModel
    margin: float = 2.0
    order_preserving: Optional[bool] = None  # None: order-preserving iff d == 1
    params: ParamsModel = Field(default_factory=ParamsModel)
    samples: int = 10_000
    seed: int = 0
    tolerance: float = 1e-9
    render: Optional[bool] = None  # None: render iff d == 2
    style: StyleModel = Field(default_factory=StyleModel)


class PipelineResponse(StrictModel):
    points: PointSetModel
    correspondence: Optional[CorrespondenceModel] = None
    map: DisplacementMapModel
    plan: PlanModel
    report: ReportModel
    audit: AuditModel
    svg: Optional[str] = None
    ok: bool


class HealthResponse(StrictModel):
    status: str
    version: str
