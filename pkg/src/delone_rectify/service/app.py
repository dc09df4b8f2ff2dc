"""FastAPI service wrapping the rectification pipeline.

Every endpoint is a pure function of its request body; domain errors map to
HTTP 400 with the exception class name, so clients can tell Infeasible from
a malformed request (422, handled by FastAPI's validation)."""

from __future__ import annotations

import math
from importlib import metadata

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from ..errors import DeloneRectifyError
from ..general_position import GeneralPositionParams
from ..generators import generate
from ..geometry import min_pairwise_distance
from ..matching import bottleneck_match
from ..rectify import HomeoPlan, build_plan, evaluate, evaluate_inverse
from ..render import RenderStyle, render_scene
from ..serialize import (
    correspondence_to_json,
    displacement_map_from_json,
    displacement_map_to_json,
    generator_spec_from_json,
    plan_from_json,
    plan_to_json,
    point_set_from_json,
    point_set_to_json,
    report_to_json,
)
from ..verify import audit_schedule, verify_plan
from . import models


def _version() -> str:
    try:
        return metadata.version("delone-rectify")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def _resolve_params(pm: models.ParamsModel, r_sep: float) -> GeneralPositionParams:
    defaults = GeneralPositionParams.defaults_for(r_sep, seed=pm.seed)
    return GeneralPositionParams(
        epsilon=pm.epsilon if pm.epsilon is not None else defaults.epsilon,
        epsilon_prime=pm.epsilon_prime if pm.epsilon_prime is not None else defaults.epsilon_prime,
        delta=pm.delta if pm.delta is not None else defaults.delta,
        seed=pm.seed,
        max_retries=pm.max_retries,
        epsilon_floor=pm.epsilon_floor,
    )


def _map_r_sep(sources: np.ndarray) -> float:
    return min_pairwise_distance(sources) if len(sources) >= 2 else math.inf


def _build_from_request(map_model: models.DisplacementMapModel, params_model: models.ParamsModel):
    m = displacement_map_from_json(map_model.model_dump())
    r_sep = _map_r_sep(m.sources)
    params = _resolve_params(params_model, r_sep)
    plan = build_plan(m, params, r_sep)
    return m, plan, r_sep


def _audit_model(plan: HomeoPlan) -> models.AuditModel:
    audit = audit_schedule(plan)
    first = None
    if audit.first_violation is not None:
        first = [float(x) for x in audit.first_violation]
    return models.AuditModel(
        ok=audit.ok, checks=audit.checks, violations=audit.violations, first_violation=first
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="delone-rectify",
        version=_version(),
        description=(
            "Rectification of boundedly displaced Delone point sets onto the "
            "integer lattice by explicit bi-Lipschitz homeomorphisms."
        ),
    )

    @app.exception_handler(DeloneRectifyError)
    async def _domain_error(_: Request, exc: DeloneRectifyError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def _value_error(_: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=400, content={"error": "ValueError", "detail": str(exc)}
        )

    @app.get("/health", response_model=models.HealthResponse)
    def health() -> models.HealthResponse:
        return models.HealthResponse(status="ok", version=_version())

    @app.post("/gen", response_model=models.GenResponse)
    def gen(req: models.GenRequest) -> models.GenResponse:
        spec = generator_spec_from_json(req.spec.model_dump())
        points, corr = generate(spec)
        return models.GenResponse(
            points=models.PointSetModel.model_validate(point_set_to_json(points)),
            correspondence=(
                models.CorrespondenceModel.model_validate(correspondence_to_json(corr))
                if corr is not None
                else None
            ),
        )

    @app.post("/match", response_model=models.DisplacementMapModel)
    def match(req: models.MatchRequest) -> models.DisplacementMapModel:
        s = point_set_from_json(req.points.model_dump())
        m = bottleneck_match(s, req.margin, order_preserving=req.order_preserving)
        return models.DisplacementMapModel.model_validate(displacement_map_to_json(m))

    @app.post("/rectify", response_model=models.RectifyResponse)
    def rectify(req: models.RectifyRequest) -> models.RectifyResponse:
        m, plan, r_sep = _build_from_request(req.map, req.params)
        return models.RectifyResponse(
            plan=models.PlanModel.model_validate(plan_to_json(plan)),
            n_maps=plan.n_maps,
            n_twists=sum(1 for mp in plan.maps if type(mp).__name__ == "HalfTwist"),
            epsilon_final=plan.epsilon_final,
            r_sep=None if math.isinf(r_sep) else r_sep,
        )

    @app.post("/verify", response_model=models.VerifyResponse)
    def verify(req: models.VerifyRequest) -> models.VerifyResponse:
        plan = plan_from_json(req.plan.model_dump())
        m = displacement_map_from_json(req.map.model_dump())
        report = verify_plan(
            plan,
            m,
            samples=req.samples,
            seed=req.seed,
            scales=tuple(req.scales),
            tolerance=req.tolerance,
        )
        audit = _audit_model(plan) if req.audit else None
        ok = report.ok and (audit is None or audit.ok)
        return models.VerifyResponse(
            report=models.ReportModel.model_validate(report_to_json(report)),
            audit=audit,
            ok=ok,
        )

    @app.post("/render")
    def render(req: models.RenderRequest) -> Response:
        plan = plan_from_json(req.plan.model_dump())
        m = displacement_map_from_json(req.map.model_dump())
        svg = render_scene(plan, m, RenderStyle(**req.style.model_dump()))
        return Response(content=svg, media_type="image/svg+xml")

    @app.post("/evaluate", response_model=models.EvaluateResponse)
    def evaluate_points(req: models.EvaluateRequest) -> models.EvaluateResponse:
        plan = plan_from_json(req.plan.model_dump())
        pts = np.array(req.points, dtype=float).reshape(-1, plan.dim)
        out = evaluate_inverse(plan, pts) if req.inverse else evaluate(plan, pts)
        return models.EvaluateResponse(images=[[float(x) for x in row] for row in out])

    @app.post("/pipeline", response_model=models.PipelineResponse)
    def pipeline(req: models.PipelineRequest) -> models.PipelineResponse:
        spec = generator_spec_from_json(req.spec.model_dump())
        points, corr = generate(spec)
        order = req.order_preserving if req.order_preserving is not None else spec.dim == 1
        m = bottleneck_match(points, req.margin, order_preserving=order)
        r_sep = _map_r_sep(m.sources)
        params = _resolve_params(req.params, r_sep)
        plan = build_plan(m, params, r_sep)
        report = verify_plan(plan, m, samples=req.samples, seed=req.seed, tolerance=req.tolerance)
        audit = _audit_model(plan)
        do_render = req.render if req.render is not None else spec.dim == 2
        svg = render_scene(plan, m, RenderStyle(**req.style.model_dump())) if do_render else None
        return models.PipelineResponse(
            points=models.PointSetModel.model_validate(point_set_to_json(points)),
            correspondence=(
                models.CorrespondenceModel.model_validate(correspondence_to_json(corr))
                if corr is not None
                else None
            ),
            map=models.DisplacementMapModel.model_validate(displacement_map_to_json(m)),
            plan=models.PlanModel.model_validate(plan_to_json(plan)),
            report=models.ReportModel.model_validate(report_to_json(report)),
            audit=audit,
            svg=svg,
            ok=report.ok and audit.ok,
        )

    return app


app = create_app()
