"""Compactly supported bi-Lipschitz building blocks.

Two primitives compose every plan: a ball push (moves the center of a ball
to a prescribed interior point, identity on and outside the boundary) and a
half twist (rotation by pi on an inner disk, interpolated to the identity on
the supporting disk's boundary).  Chains of ball pushes transport a point
along a segment inside a fixed tube.

Exactness conventions, relied on throughout plan construction:
  * a push stores its displacement vector, and evaluating it at its center
    returns ``center + offset`` bit-for-bit;
  * points outside a support are returned untouched, bit-for-bit;
  * the half twist maps the inner disk by u -> 2w - u without trigonometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import InverseRootFindFailed, PushRatioExceeded, StepTooLong

_RATIO_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class BallPush:
    """u -> u + max(0, 1 - |u - center|/radius) * offset.

    Push ratio alpha = |offset|/radius is capped at 1/2, giving Lipschitz
    constants within [1 - alpha, 1 + alpha] in both directions.
    """

    center: np.ndarray
    radius: float
    offset: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        o = np.asarray(self.offset, dtype=float)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        norm = math.sqrt(float(o @ o))
        if norm > 0.5 * self.radius * _RATIO_SLACK:
            raise PushRatioExceeded(
                f"|offset| = {norm:.6g} exceeds radius/2 = {self.radius / 2:.6g}"
            )
        c.flags.writeable = False
        o.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "offset", o)

    @property
    def alpha(self) -> float:
        return math.sqrt(float(self.offset @ self.offset)) / self.radius

    @property
    def target(self) -> np.ndarray:
        return self.center + self.offset

    @property
    def support_center(self) -> np.ndarray:
        return self.center

    @property
    def support_radius(self) -> float:
        return self.radius

    def apply_inplace(self, pts: np.ndarray) -> None:
        v = pts - self.center
        r2 = np.einsum("ij,ij->i", v, v)
        mask = r2 < self.radius * self.radius
        if not mask.any():
            return
        f = 1.0 - np.sqrt(r2[mask]) / self.radius
        pts[mask] = pts[mask] + f[:, None] * self.offset

    def apply_inverse_inplace(self, pts: np.ndarray) -> None:
        v = pts - self.center
        r2 = np.einsum("ij,ij->i", v, v)
        mask = r2 < self.radius * self.radius
        if not mask.any():
            return
        idx = np.nonzero(mask)[0]
        for i in idx:
            pts[i] = self._invert_point(pts[i])

    def _invert_point(self, y: np.ndarray) -> np.ndarray:
        def g(t: float) -> float:
            u = y - t * self.offset
            r = float(np.linalg.norm(u - self.center))
            return max(0.0, 1.0 - r / self.radius) - t

        g0 = g(0.0)
        if g0 <= 0.0:
            return y.copy()
        t_star = brentq(g, 0.0, 1.0, xtol=1e-14, rtol=8.9e-16)
        u = y - t_star * self.offset
        check = u.reshape(1, -1).copy()
        self.apply_inplace(check)
        if float(np.linalg.norm(check[0] - y)) > 1e-9:
            raise InverseRootFindFailed(
                f"ball-push radial solve missed tolerance at y={y.tolist()}"
            )
        return u

    def lipschitz_factor(self) -> float:
        a = self.alpha
        return max(1.0 + a, 1.0 / (1.0 - a))


@dataclass(frozen=True)
class HalfTwist:
    """Rotation by theta(r) about ``center``: pi on the closed disk of radius
    epsilon/6, linearly interpolated to 0 at radius epsilon/3, identity
    beyond.  d = 2 only."""

    center: np.ndarray
    epsilon: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (2,):
            raise ValueError("half twists are two-dimensional")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        c.flags.writeable = False
        object.__setattr__(self, "center", c)

    @property
    def outer_radius(self) -> float:
        return self.epsilon / 3.0

    @property
    def inner_radius(self) -> float:
        return self.epsilon / 6.0

    @property
    def support_center(self) -> np.ndarray:
        return self.center

    @property
    def support_radius(self) -> float:
        return self.outer_radius

    def theta(self, r: np.ndarray) -> np.ndarray:
        """Rotation angle as a function of the radius."""
        r = np.asarray(r, dtype=float)
        ramp = math.pi * (self.outer_radius - r) / self.inner_radius
        return np.where(r <= self.inner_radius, math.pi, np.where(r >= self.outer_radius, 0.0, ramp))

    def _apply(self, pts: np.ndarray, sign: float) -> None:
        v = pts - self.center
        r = np.sqrt(np.einsum("ij,ij->i", v, v))
        mask = r < self.outer_radius
        if not mask.any():
            return
        vm = v[mask]
        rm = r[mask]
        out = np.empty_like(vm)
        inner = rm <= self.inner_radius
        # exact pi rotation, no trigonometry
        out[inner] = -vm[inner]
        ramp = ~inner
        if ramp.any():
            ang = sign * math.pi * (self.outer_radius - rm[ramp]) / self.inner_radius
            ca, sa = np.cos(ang), np.sin(ang)
            x, y = vm[ramp, 0], vm[ramp, 1]
            out[ramp, 0] = ca * x - sa * y
            out[ramp, 1] = sa * x + ca * y
        pts[mask] = self.center + out

    def apply_inplace(self, pts: np.ndarray) -> None:
        self._apply(pts, +1.0)

    def apply_inverse_inplace(self, pts: np.ndarray) -> None:
        self._apply(pts, -1.0)

    def lipschitz_factor(self, samples: int = 10_000) -> float:
        """Supremum over radii of the derivative's operator norm, by dense
        sampling of the ramp; the twist's Jacobian is a rotation times a
        unit shear, so the inverse factor coincides with the forward one."""
        r = np.linspace(self.inner_radius, self.outer_radius, samples)
        c = r * (math.pi / self.inner_radius)
        sigma = np.abs(c) / 2.0 + np.sqrt(1.0 + c * c / 4.0)
        return float(np.max(sigma))


LocalMap = Union[BallPush, HalfTwist]


def ball_push(c, rho: float, p) -> BallPush:
    """Push taking ``c`` to ``p`` inside ball(c, rho); |p - c| <= rho/2."""
    c = np.asarray(c, dtype=float)
    p = np.asarray(p, dtype=float)
    return BallPush(center=c, radius=float(rho), offset=p - c)


def half_twist(w, epsilon: float) -> HalfTwist:
    return HalfTwist(center=np.asarray(w, dtype=float), epsilon=float(epsilon))


def subdivide(a: np.ndarray, b: np.ndarray, max_step: float) -> np.ndarray:
    """Waypoints from a to b with steps of length <= max_step (endpoints
    exact)."""
    length = float(np.linalg.norm(b - a))
    n = max(1, int(math.ceil(length / max_step)))
    return np.linspace(a, b, n + 1)


def tube_push(waypoints: Sequence[np.ndarray], rho: float) -> List[BallPush]:
    """Chain of pushes transporting waypoints[0] to waypoints[-1], each
    supported in ball(waypoint, rho); consecutive gaps must be <= rho/2.

    The chain is threaded: each push's center is the exact floating-point
    landing site of the previous one, so the carried point follows the chain
    bit-exactly and lands on the final target up to one rounding.
    """
    pts = np.asarray(waypoints, dtype=float)
    if pts.shape[0] < 2:
        raise StepTooLong("a tube needs at least two waypoints")
    steps = pts[1:] - pts[:-1]
    gaps = np.sqrt(np.einsum("kd,kd->k", steps, steps))
    if np.any(gaps > (rho / 2.0) * _RATIO_SLACK):
        worst = float(gaps.max())
        raise StepTooLong(f"waypoint gap {worst:.6g} exceeds rho/2 = {rho / 2.0:.6g}")
    pushes: List[BallPush] = []
    carrier = pts[0]
    for nxt in pts[1:]:
        off = nxt - carrier
        push = BallPush(center=carrier, radius=float(rho), offset=off)
        pushes.append(push)
        carrier = carrier + off
    return pushes


def chain_endpoint(pushes: Sequence[BallPush]) -> np.ndarray:
    """Exact landing site of the carried point of a threaded chain."""
    last = pushes[-1]
    return last.center + last.offset


def apply_maps_inplace(maps: Sequence[LocalMap], pts: np.ndarray) -> None:
    for m in maps:
        m.apply_inplace(pts)


def apply_maps_inverse_inplace(maps: Sequence[LocalMap], pts: np.ndarray) -> None:
    for m in reversed(maps):
        m.apply_inverse_inplace(pts)
