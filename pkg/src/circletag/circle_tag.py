"""Circle-Tag planning: leader circles, block partitions and Block-Cover sweeps.

Every round starts with the leader and all active robots gathered at the
East point of the previous circle, ``origin + (R_prev, 0)``.  The leader
moves East to ``R_next`` and circles there.  Each active robot transits
along the circle of radius ``R_prev`` to its sector, sweeps ``k`` arcs
spaced one range apart out to ``R_next``, and returns to the new East
point along a chord.  Blocks therefore tile the annulus ``[R_prev,
R_next]`` and consecutive rounds leave no uncovered ring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .geometry import (CONTINUITY_TOL, TWO_PI, Arc, PlannedPath, Point2, Segment,
                       dist, normalize_angle)


@dataclass(frozen=True)
class Block:
    center: Point2
    inner_radius: float
    outer_radius: float
    start_angle: float
    apex_angle: float
    n_arcs: int
    assigned_robot: int

    def __post_init__(self):
        object.__setattr__(self, "center", Point2(float(self.center[0]), float(self.center[1])))

    def contains(self, p, tol: float = 1e-12) -> bool:
        """Closed annular-sector membership test."""
        rho = dist(p, self.center)
        if rho < self.inner_radius - tol or rho > self.outer_radius + tol:
            return False
        if rho == 0.0:
            return True
        a = normalize_angle(math.atan2(p[1] - self.center[1], p[0] - self.center[0]) - self.start_angle)
        return a <= self.apex_angle + tol or a >= TWO_PI - tol


@dataclass(frozen=True)
class RoundPlan:
    round_index: int
    k: int
    R_prev: float
    R_next: float
    leader_path: PlannedPath
    blocks: Tuple[Block, ...]
    active_paths: Tuple[PlannedPath, ...]

    @property
    def gather_start(self) -> Point2:
        return self.leader_path.start_point

    @property
    def gather_end(self) -> Point2:
        return self.leader_path.end_point


def ccs_next_radius(R_prev: float, k: int) -> float:
    if R_prev < 0 or k < 0:
        raise ValueError("radius and active count must be non-negative")
    return R_prev + (k if k >= 2 else 1)


def leader_round_path(origin: Sequence[float], R: float, east_extension: float) -> PlannedPath:
    """Full counter-clockwise circle of radius ``R`` from its East point, then East."""
    if R < 0 or east_extension < 0:
        raise ValueError("radius and extension must be non-negative")
    ox, oy = float(origin[0]), float(origin[1])
    elements = []
    if R > 0:
        elements.append(Arc(Point2(ox, oy), R, 0.0, TWO_PI))
    if east_extension > 0:
        elements.append(Segment(Point2(ox + R, oy), Point2(ox + R + east_extension, oy)))
    return PlannedPath(elements)


def leader_sweep_path(origin: Sequence[float], R_prev: float, R_next: float) -> PlannedPath:
    """Leader motion inside one round: East from ``R_prev`` to ``R_next``, then circle ``R_next``."""
    if not R_next > R_prev >= 0:
        raise ValueError("the next radius must exceed the previous one")
    ox, oy = float(origin[0]), float(origin[1])
    return PlannedPath([Segment(Point2(ox + R_prev, oy), Point2(ox + R_next, oy)),
                        Arc(Point2(ox, oy), R_next, 0.0, TWO_PI)])


def partition_blocks(origin: Sequence[float], R_inner: float, k: int,
                     robot_ids: Sequence[int]) -> List[Block]:
    if k < 2:
        raise ValueError(f"partitioning needs at least two active robots, got k={k}")
    if len(robot_ids) != k:
        raise ValueError("one robot id per block is required")
    if R_inner < 0:
        raise ValueError("inner radius must be non-negative")
    c = Point2(float(origin[0]), float(origin[1]))
    apex = TWO_PI / k
    return [Block(c, float(R_inner), float(R_inner + k), apex * j, apex, k, int(rid))
            for j, rid in enumerate(robot_ids)]


def _polar(c: Point2, rho: float, a: float) -> Point2:
    return Point2(c.x + rho * math.cos(a), c.y + rho * math.sin(a))


def block_cover_path(b: Block, entry: Sequence[float]) -> PlannedPath:
    """Transit to the block's start ray, then sweep its arcs back and forth outward."""
    c = b.center
    rho_entry = dist(entry, c)
    if abs(rho_entry - b.inner_radius) > CONTINUITY_TOL:
        raise ValueError(f"entry is {rho_entry} from the center, expected the inner radius {b.inner_radius}")
    theta, apex, R = b.start_angle, b.apex_angle, b.inner_radius
    elements = []
    if R > 0:
        phi = math.atan2(entry[1] - c.y, entry[0] - c.x)
        turn = normalize_angle(theta - phi)
        if turn > math.pi:
            turn -= TWO_PI
        if abs(turn) * R > CONTINUITY_TOL:
            elements.append(Arc(c, R, phi, turn))
    elements.append(Segment(_polar(c, R, theta), _polar(c, R + 1, theta)))
    for m in range(1, b.n_arcs + 1):
        rho = R + m
        if m % 2:
            elements.append(Arc(c, rho, theta, apex))
            side = theta + apex
        else:
            elements.append(Arc(c, rho, theta + apex, -apex))
            side = theta
        if m < b.n_arcs:
            elements.append(Segment(_polar(c, rho, side), _polar(c, rho + 1, side)))
    return PlannedPath(elements)


def cover_time(b: Block) -> float:
    """Block-Cover duration when starting on the block's own start ray."""
    return block_cover_path(b, _polar(b.center, b.inner_radius, b.start_angle)).total_length


def active_round_path(b: Block, gather_start: Sequence[float], gather_end: Sequence[float]) -> PlannedPath:
    """Block-Cover from the gathering point, then a chord back to the next one."""
    sweep = block_cover_path(b, gather_start)
    end = sweep.end_point
    if dist(end, gather_end) <= CONTINUITY_TOL:
        return sweep
    return PlannedPath(sweep.elements + (Segment(end, Point2(*gather_end)),))


def plan_round(origin: Sequence[float], round_index: int, R_prev: float,
               active_ids: Sequence[int]) -> RoundPlan:
    """Full motion plan for one round given the robots eligible to search.

    With fewer than two eligible robots nobody is partitioned a block; the
    eligible robot (if any) rides along with the leader.
    """
    k = len(active_ids)
    R_next = ccs_next_radius(R_prev, k)
    leader = leader_sweep_path(origin, R_prev, R_next)
    if k < 2:
        return RoundPlan(round_index, k, R_prev, R_next, leader, (), ())
    blocks = tuple(partition_blocks(origin, R_prev, k, sorted(active_ids)))
    start, end = leader.start_point, leader.end_point
    paths = tuple(active_round_path(b, start, end) for b in blocks)
    return RoundPlan(round_index, k, R_prev, R_next, leader, blocks, paths)
