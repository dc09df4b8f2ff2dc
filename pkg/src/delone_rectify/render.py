"""SVG rendering of the planar construction.

Draws, in paint order: the image of a reference grid under the plan (the
deformation made visible), tube capsules, traveler paths, twist disks (outer
and inner circles at every crossing), then sources and targets.  Output is
deterministic: fixed float formatting, no timestamps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import UnsupportedDimension
from .matching import DisplacementMap
from .rectify import HomeoPlan, evaluate


@dataclass(frozen=True)
class RenderStyle:
    scale: float = 24.0  # px per length unit (viewBox only; geometry is unitless)
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


@dataclass
class SceneDescription:
    """Ordered draw list; every element is finite and inside the viewport."""

    viewport: Tuple[float, float, float, float]  # x, y, w, h (SVG coords)
    elements: List[str] = field(default_factory=list)


def _fmt(x: float, decimals: int) -> str:
    return f"{x:.{decimals}f}"


class _Canvas:
    def __init__(self, style: RenderStyle):
        self.style = style
        self.elements: List[str] = []
        self.lo = np.array([np.inf, np.inf])
        self.hi = np.array([-np.inf, -np.inf])

    def _track(self, pts: np.ndarray) -> None:
        if len(pts):
            self.lo = np.minimum(self.lo, pts.min(axis=0))
            self.hi = np.maximum(self.hi, pts.max(axis=0))

    def _coords(self, pts: np.ndarray) -> str:
        d = self.style.decimals
        return " ".join(f"{_fmt(p[0], d)},{_fmt(-p[1], d)}" for p in pts)

    def polyline(self, pts: np.ndarray, color: str, width: float, opacity: float = 1.0, cap: str = "butt") -> None:
        if len(pts) < 2:
            return
        self._track(pts)
        extra = f' stroke-opacity="{opacity}"' if opacity != 1.0 else ""
        self.elements.append(
            f'<polyline points="{self._coords(pts)}" fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(width, self.style.decimals)}" stroke-linecap="{cap}" '
            f'stroke-linejoin="round"{extra} />'
        )

    def circle(self, c: np.ndarray, r: float, stroke: str, width: float, fill: str = "none") -> None:
        self._track(np.array([c - r, c + r]))
        d = self.style.decimals
        self.elements.append(
            f'<circle cx="{_fmt(c[0], d)}" cy="{_fmt(-c[1], d)}" r="{_fmt(r, d)}" '
            f'fill="{fill}" stroke="{stroke}" stroke-width="{_fmt(width, d)}" />'
        )

    def dot(self, c: np.ndarray, r: float, fill: str) -> None:
        self._track(np.array([c - r, c + r]))
        d = self.style.decimals
        self.elements.append(
            f'<circle cx="{_fmt(c[0], d)}" cy="{_fmt(-c[1], d)}" r="{_fmt(r, d)}" fill="{fill}" />'
        )

    def square(self, c: np.ndarray, half: float, stroke: str, width: float) -> None:
        self._track(np.array([c - half, c + half]))
        d = self.style.decimals
        self.elements.append(
            f'<rect x="{_fmt(c[0] - half, d)}" y="{_fmt(-c[1] - half, d)}" '
            f'width="{_fmt(2 * half, d)}" height="{_fmt(2 * half, d)}" '
            f'fill="none" stroke="{stroke}" stroke-width="{_fmt(width, d)}" />'
        )

    def scene(self) -> SceneDescription:
        pad = self.style.padding
        lo = self.lo - pad
        hi = self.hi + pad
        viewport = (float(lo[0]), float(-hi[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))
        return SceneDescription(viewport=viewport, elements=list(self.elements))


def scene_to_svg(scene: SceneDescription, style: RenderStyle) -> str:
    x, y, w, h = scene.viewport
    d = style.decimals
    width_px = _fmt(w * style.scale, 1)
    height_px = _fmt(h * style.scale, 1)
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width_px}" height="{height_px}" '
        f'viewBox="{_fmt(x, d)} {_fmt(y, d)} {_fmt(w, d)} {_fmt(h, d)}">\n'
    )
    body = "\n".join(scene.elements)
    return head + body + "\n</svg>\n"


def _grid_polylines(plan: HomeoPlan, style: RenderStyle) -> List[np.ndarray]:
    region = plan.bounding_region
    step = min(plan.epsilon_final / 10.0, style.grid_step / 4.0)
    lines: List[np.ndarray] = []
    x0, y0 = float(region.lower[0]), float(region.lower[1])
    x1, y1 = float(region.upper[0]), float(region.upper[1])
    xs = np.arange(np.ceil(x0 / style.grid_step), np.floor(x1 / style.grid_step) + 1) * style.grid_step
    ys = np.arange(np.ceil(y0 / style.grid_step), np.floor(y1 / style.grid_step) + 1) * style.grid_step
    n_v = max(2, int(np.ceil((y1 - y0) / step)) + 1)
    n_h = max(2, int(np.ceil((x1 - x0) / step)) + 1)
    tv = np.linspace(y0, y1, n_v)
    th = np.linspace(x0, x1, n_h)
    for x in xs:
        lines.append(np.column_stack([np.full_like(tv, x), tv]))
    for y in ys:
        lines.append(np.column_stack([th, np.full_like(th, y)]))
    return lines


def render_scene(plan: HomeoPlan, m: DisplacementMap, style: Optional[RenderStyle] = None) -> str:
    """Render the plan and its displacement map as an SVG document (d = 2)."""
    if plan.dim != 2:
        raise UnsupportedDimension(f"rendering is two-dimensional, plan has d={plan.dim}")
    if len(m) != len(plan.ledger.travelers):
        raise ValueError("plan and displacement map disagree on the number of pairs")
    style = style or RenderStyle()
    canvas = _Canvas(style)

    # deformed reference grid (batched through one evaluate call)
    lines = _grid_polylines(plan, style)
    if lines:
        flat = np.concatenate(lines)
        image = evaluate(plan, flat)
        pos = 0
        for line in lines:
            seg = image[pos : pos + len(line)]
            pos += len(line)
            canvas.polyline(seg, style.grid_color, style.grid_width)

    travelers = plan.ledger.travelers
    for t in travelers:
        for leg in t.legs:
            if leg.kind == "tube":
                canvas.polyline(
                    np.array([leg.a, leg.b]),
                    style.tube_color,
                    2.0 * leg.radius,
                    opacity=style.tube_opacity,
                    cap="round",
                )
    for t in travelers:
        if not t.degenerate:
            canvas.polyline(t.waypoints[1:], style.path_color, style.path_width)

    seen: Dict[Tuple[float, float], bool] = {}
    eps = plan.epsilon_final
    for t in travelers:
        for c in t.crossings:
            key = (round(float(c[0]), 9), round(float(c[1]), 9))
            if key in seen:
                continue
            seen[key] = True
            canvas.circle(c, eps / 3.0, style.twist_outer_color, style.twist_width)
            canvas.circle(c, eps / 6.0, style.twist_inner_color, style.twist_width)

    for t in travelers:
        canvas.dot(t.source, style.source_radius, style.source_color)
    for t in travelers:
        canvas.square(t.target, style.target_half, style.target_color, style.path_width)

    if not np.all(np.isfinite(canvas.lo)):
        # nothing drawn except possibly the grid of an empty plan
        canvas._track(np.array([plan.bounding_region.lower, plan.bounding_region.upper]))
    return scene_to_svg(canvas.scene(), style)
