"""Planar primitives: points, segments, arcs and unit-speed paths.

Lengths are in units of the communication range.  Robots move at unit
speed, so arc length along a path and elapsed time are interchangeable.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

TWO_PI = 2.0 * math.pi
CONTINUITY_TOL = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


def dist(p: Sequence[float], q: Sequence[float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def normalize_angle(a: float) -> float:
    a = math.fmod(a, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    # fmod of a tiny negative number can land exactly on 2*pi
    return 0.0 if a >= TWO_PI else a


@dataclass(frozen=True)
class Segment:
    start: Point2
    end: Point2

    def __post_init__(self):
        object.__setattr__(self, "start", Point2(*map(float, self.start)))
        object.__setattr__(self, "end", Point2(*map(float, self.end)))

    @property
    def length(self) -> float:
        return dist(self.start, self.end)

    @property
    def start_point(self) -> Point2:
        return self.start

    @property
    def end_point(self) -> Point2:
        return self.end

    def point_at(self, t: float) -> Point2:
        length = self.length
        if length == 0.0:
            return self.start
        f = t / length
        return Point2(self.start.x + f * (self.end.x - self.start.x),
                      self.start.y + f * (self.end.y - self.start.y))


@dataclass(frozen=True)
class Arc:
    """Circular arc; ``sweep`` is signed (positive is counter-clockwise)."""

    center: Point2
    radius: float
    start_angle: float
    sweep: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"arc radius must be positive, got {self.radius}")
        if abs(self.sweep) > TWO_PI + 1e-12:
            raise ValueError(f"arc sweep exceeds a full turn: {self.sweep}")
        object.__setattr__(self, "center", Point2(*map(float, self.center)))
        object.__setattr__(self, "start_angle", normalize_angle(float(self.start_angle)))

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def _at_angle(self, a: float) -> Point2:
        return Point2(self.center.x + self.radius * math.cos(a),
                      self.center.y + self.radius * math.sin(a))

    @property
    def start_point(self) -> Point2:
        return self._at_angle(self.start_angle)

    @property
    def end_point(self) -> Point2:
        return self._at_angle(self.start_angle + self.sweep)

    def point_at(self, t: float) -> Point2:
        return self._at_angle(self.start_angle + math.copysign(t / self.radius, self.sweep))


PathElement = Union[Segment, Arc]


class PlannedPath:
    """Continuous chain of path elements traversed at unit speed."""

    __slots__ = ("elements", "offsets", "total_length")

    def __init__(self, elements: Sequence[PathElement]):
        elements = tuple(elements)
        if not elements:
            raise ValueError("a planned path needs at least one element")
        offsets = []
        total = 0.0
        prev_end = None
        for i, e in enumerate(elements):
            if not e.length > 0.0:
                raise ValueError(f"element {i} has zero length")
            if prev_end is not None and dist(prev_end, e.start_point) > CONTINUITY_TOL:
                raise ValueError(
                    f"element {i} starts at {tuple(e.start_point)}, "
                    f"previous element ended at {tuple(prev_end)}")
            offsets.append(total)
            total += e.length
            prev_end = e.end_point
        self.elements = elements
        self.offsets = tuple(offsets)
        self.total_length = total

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def start_point(self) -> Point2:
        return self.elements[0].start_point

    @property
    def end_point(self) -> Point2:
        return self.elements[-1].end_point

    def point_at(self, t: float) -> Point2:
        return point_at(self, t)


def point_at(path: PlannedPath, t: float) -> Point2:
    if not 0.0 <= t <= path.total_length:
        raise ValueError(f"arc length {t} outside [0, {path.total_length}]")
    i = max(bisect_right(path.offsets, t) - 1, 0)
    e = path.elements[i]
    return e.point_at(min(t - path.offsets[i], e.length))


def closest_approach(element: PathElement, p: Sequence[float]) -> Tuple[float, float]:
    """Earliest arc length minimising the distance to ``p``, and that distance."""
    if isinstance(element, Segment):
        length = element.length
        ux = (element.end.x - element.start.x) / length
        uy = (element.end.y - element.start.y) / length
        t = (p[0] - element.start.x) * ux + (p[1] - element.start.y) * uy
        t = min(max(t, 0.0), length)
        return t, dist(element.point_at(t), p)

    rho = element.radius
    qx, qy = p[0] - element.center.x, p[1] - element.center.y
    q = math.hypot(qx, qy)
    if q == 0.0:
        return 0.0, rho
    span = abs(element.sweep)
    delta = _travelled_angle(element, math.atan2(qy, qx))
    if delta <= span:
        return rho * delta, abs(q - rho)
    d0 = dist(element.start_point, p)
    d1 = dist(element.end_point, p)
    return (0.0, d0) if d0 <= d1 else (element.length, d1)


def _travelled_angle(arc: Arc, phi: float) -> float:
    # angle the mover has to travel from the arc start to face direction phi
    return normalize_angle(math.copysign(1.0, arc.sweep) * (phi - arc.start_angle))


def first_entry_time(element: PathElement, p: Sequence[float], r: float) -> Optional[float]:
    """Smallest arc length at which the mover is within ``r`` of ``p``, else None."""
    if not r > 0.0:
        raise ValueError("range must be positive")
    t = float(entry_times(element, np.asarray([p], dtype=float), r)[0])
    return None if math.isinf(t) else t


def entry_times(element: PathElement, points: np.ndarray, r: float) -> np.ndarray:
    """Vectorised :func:`first_entry_time`; ``inf`` marks points never reached."""
    if isinstance(element, Segment):
        length = element.length
        return segment_entry(np.array([element.start]), np.array([element.end]) - np.array([element.start]),
                             np.array([length]), points, r)[0]
    return arc_entry(np.array([element.center]), np.array([element.radius]),
                     np.array([element.start_angle]), np.array([element.sweep]), points, r)[0]


def segment_entry(starts: np.ndarray, deltas: np.ndarray, lengths: np.ndarray,
                  points: np.ndarray, r: float) -> np.ndarray:
    """Entry arc lengths for m segments against f points, shape (m, f)."""
    u = deltas / lengths[:, None]
    wx = points[None, :, 0] - starts[:, 0:1]
    wy = points[None, :, 1] - starts[:, 1:2]
    b = wx * u[:, 0:1] + wy * u[:, 1:2]
    c = wx * wx + wy * wy - r * r
    disc = b * b - c
    with np.errstate(invalid="ignore"):
        t = b - np.sqrt(disc)
    out = np.where((disc >= 0.0) & (t >= 0.0) & (t <= lengths[:, None]), t, np.inf)
    return np.where(c <= 0.0, 0.0, out)


def arc_entry(centers: np.ndarray, radii: np.ndarray, start_angles: np.ndarray,
              sweeps: np.ndarray, points: np.ndarray, r: float) -> np.ndarray:
    """Entry arc lengths for m arcs against f points, shape (m, f)."""
    qx = points[None, :, 0] - centers[:, 0:1]
    qy = points[None, :, 1] - centers[:, 1:2]
    q = np.hypot(qx, qy)
    rho = radii[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (rho * rho + q * q - r * r) / (2.0 * rho * q)
    beta = np.arccos(np.clip(kappa, -1.0, 1.0))
    sign = np.where(sweeps < 0.0, -1.0, 1.0)[:, None]
    delta = np.mod(sign * (np.arctan2(qy, qx) - start_angles[:, None]), TWO_PI)
    span = np.abs(sweeps)[:, None]
    inside_now = (delta <= beta) | (delta >= TWO_PI - beta)
    tau = np.where(inside_now, 0.0, delta - beta)
    out = np.where((kappa <= 1.0) & (tau <= span), rho * tau, np.inf)
    centred = q == 0.0
    if centred.any():
        out = np.where(centred, np.where(rho <= r, 0.0, np.inf), out)
    return out


@dataclass(frozen=True)
class UavGeometry:
    h: float
    s: float

    def __post_init__(self):
        if self.h < 0 or self.s < 0 or (self.h == 0 and self.s == 0):
            raise ValueError("altitude and spacing must be non-negative and not both zero")


def effective_range(g: UavGeometry) -> float:
    """Planar range guaranteed from altitude ``h`` with arc half-spacing ``s``."""
    return math.hypot(g.h, g.s)
