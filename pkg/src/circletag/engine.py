"""Continuous-time execution of Circle-Tag on a deployment.

The simulator is event-free in the usual sense: every mover's path in a
round is fixed when the round starts, so the first time each frozen robot
comes within range is found in closed form over all path elements at once.

Robots found by the leader ride with it and search from the next round.
Robots found by an active robot stay with it until the round ends, are
handed to the leader at the gathering point, ride with the leader for one
round, and search from the round after that.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import circle_tag
from .deployment import Deployment
from .geometry import TWO_PI, Arc, PlannedPath, Segment, arc_entry, point_at, segment_entry

# Relative slack on the tagging range, so that robots sitting exactly one
# range away from an arc or a radial link are not lost to rounding.
RANGE_SLACK = 1e-12
CHUNK = 256
PROP1_TOL = 1e-9

LEADER = 0


class SimulationInvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimOptions:
    trace_dt: Optional[float] = None
    offline_variant: Optional[str] = None
    check_invariants: bool = True

    def __post_init__(self):
        if self.trace_dt is not None and not self.trace_dt > 0:
            raise ValueError("trace sampling interval must be positive")
        if self.offline_variant not in (None, "greedy", "exact"):
            raise ValueError(f"unknown offline variant {self.offline_variant!r}")


@dataclass(frozen=True)
class RoundLog:
    round_index: int
    k: int
    R_prev: float
    R_next: float
    start_time: float
    end_time: float
    leader_travel_time: float
    cover_times: Tuple[float, ...]
    block_cover_time: Optional[float]
    east_transit: float
    active_ids: Tuple[int, ...]
    tags: Tuple[Tuple[int, float, int], ...]

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    def prop1_slack(self, allowance: bool = True) -> Optional[float]:
        """``2 C(b) [+ east transit] - duration``; negative means a violation."""
        if self.block_cover_time is None:
            return None
        bound = 2.0 * self.block_cover_time + (self.east_transit if allowance else 0.0)
        return bound - self.duration


@dataclass(frozen=True)
class SimResult:
    makespan: float
    rounds: Tuple[RoundLog, ...]
    tag_times: np.ndarray
    taggers: np.ndarray
    tag_rounds: np.ndarray
    activation_rounds: np.ndarray
    positions: np.ndarray
    origin: Tuple[float, float]
    trace: Optional[List[tuple]] = None
    offline_reference: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.positions)

    def tag_order(self) -> np.ndarray:
        return np.lexsort((np.arange(self.n), self.tag_times))

    def serialize(self) -> bytes:
        """Canonical text form; identical inputs give identical bytes."""
        out = io.StringIO()
        out.write(f"makespan,{self.makespan!r}\n")
        for i in range(self.n):
            out.write(f"robot,{i},{self.tag_times[i]!r},{self.taggers[i]},"
                      f"{self.tag_rounds[i]},{self.activation_rounds[i]}\n")
        for rl in self.rounds:
            out.write(f"round,{rl.round_index},{rl.k},{rl.R_prev!r},{rl.R_next!r},"
                      f"{rl.start_time!r},{rl.end_time!r},{rl.leader_travel_time!r}\n")
        return out.getvalue().encode()


def _arc_bboxes(c, rho, alpha, sweep):
    sign = np.where(sweep < 0, -1.0, 1.0)
    ends = alpha + sweep
    xs = [c[:, 0] + rho * np.cos(alpha), c[:, 0] + rho * np.cos(ends)]
    ys = [c[:, 1] + rho * np.sin(alpha), c[:, 1] + rho * np.sin(ends)]
    lo_x, hi_x = np.minimum(*xs), np.maximum(*xs)
    lo_y, hi_y = np.minimum(*ys), np.maximum(*ys)
    span = np.abs(sweep)
    for a, dx, dy in ((0.0, 1, 0), (0.5 * math.pi, 0, 1), (math.pi, -1, 0), (1.5 * math.pi, 0, -1)):
        hit = np.mod(sign * (a - alpha), TWO_PI) <= span
        if dx:
            x = c[:, 0] + dx * rho
            lo_x = np.where(hit, np.minimum(lo_x, x), lo_x)
            hi_x = np.where(hit, np.maximum(hi_x, x), hi_x)
        else:
            y = c[:, 1] + dy * rho
            lo_y = np.where(hit, np.minimum(lo_y, y), lo_y)
            hi_y = np.where(hit, np.maximum(hi_y, y), hi_y)
    return lo_x, hi_x, lo_y, hi_y


class _PathArrays:
    """Element parameters of one mover's path, split by element kind."""

    def __init__(self, path: PlannedPath):
        segs = [(off, e) for off, e in zip(path.offsets, path.elements) if isinstance(e, Segment)]
        arcs = [(off, e) for off, e in zip(path.offsets, path.elements) if isinstance(e, Arc)]
        self.seg_off = np.array([o for o, _ in segs])
        self.seg_start = np.array([e.start for _, e in segs]).reshape(-1, 2)
        self.seg_delta = np.array([e.end for _, e in segs]).reshape(-1, 2) - self.seg_start
        self.seg_len = np.array([e.length for _, e in segs])
        self.arc_off = np.array([o for o, _ in arcs])
        self.arc_c = np.array([e.center for _, e in arcs]).reshape(-1, 2)
        self.arc_rho = np.array([e.radius for _, e in arcs])
        self.arc_alpha = np.array([e.start_angle for _, e in arcs])
        self.arc_sweep = np.array([e.sweep for _, e in arcs])


def earliest_entries(paths: Sequence[PlannedPath], mover_ids: Sequence[int], t0: float,
                     points: np.ndarray, r: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """First time any mover gets within ``r`` of each point, and which mover.

    ``paths`` must be ordered by ascending mover id; exact ties go to the
    lower id.  Points never reached get time ``inf`` and mover ``-1``.
    """
    f = len(points)
    best_t = np.full(f, np.inf)
    best_m = np.full(f, -1, dtype=np.int64)
    if f == 0:
        return best_t, best_m
    reach = r * (1.0 + RANGE_SLACK)
    px, py = points[:, 0], points[:, 1]
    for path, mover in zip(paths, mover_ids):
        a = _PathArrays(path)
        jobs = []
        for lo in range(0, len(a.seg_len), CHUNK):
            sl = slice(lo, lo + CHUNK)
            ends = a.seg_start[sl] + a.seg_delta[sl]
            box = (np.minimum(a.seg_start[sl, 0], ends[:, 0]).min(), np.maximum(a.seg_start[sl, 0], ends[:, 0]).max(),
                   np.minimum(a.seg_start[sl, 1], ends[:, 1]).min(), np.maximum(a.seg_start[sl, 1], ends[:, 1]).max())
            jobs.append(("seg", sl, box))
        if len(a.arc_rho):
            bx = _arc_bboxes(a.arc_c, a.arc_rho, a.arc_alpha, a.arc_sweep)
            for lo in range(0, len(a.arc_rho), CHUNK):
                sl = slice(lo, lo + CHUNK)
                jobs.append(("arc", sl, (bx[0][sl].min(), bx[1][sl].max(), bx[2][sl].min(), bx[3][sl].max())))
        for kind, sl, (x0, x1, y0, y1) in jobs:
            cand = np.flatnonzero((px >= x0 - reach) & (px <= x1 + reach) & (py >= y0 - reach) & (py <= y1 + reach))
            if not len(cand):
                continue
            sub = points[cand]
            if kind == "seg":
                local = segment_entry(a.seg_start[sl], a.seg_delta[sl], a.seg_len[sl], sub, reach)
                offs = a.seg_off[sl]
            else:
                local = arc_entry(a.arc_c[sl], a.arc_rho[sl], a.arc_alpha[sl], a.arc_sweep[sl], sub, reach)
                offs = a.arc_off[sl]
            t = (t0 + offs[:, None] + local).min(axis=0)
            better = t < best_t[cand]
            best_t[cand[better]] = t[better]
            best_m[cand[better]] = mover
    return best_t, best_m


def _max_pairwise(pts: np.ndarray) -> float:
    best = 0.0
    for lo in range(0, len(pts), 512):
        d = pts[lo:lo + 512, None, :] - pts[None, :, :]
        best = max(best, float(np.hypot(d[..., 0], d[..., 1]).max()))
    return best


def simulate(d: Deployment, options: SimOptions = SimOptions()) -> SimResult:
    nd = d.normalized()
    pts = np.array(nd.positions)
    n = len(pts)
    origin = (float(pts[0, 0]), float(pts[0, 1]))

    tag_time = np.full(n, np.inf)
    tagger = np.full(n, -1, dtype=np.int64)
    tag_round = np.full(n, -1, dtype=np.int64)
    eligible_from = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    activation = np.full(n, -1, dtype=np.int64)
    tag_time[LEADER] = 0.0

    d0 = np.hypot(*(pts - pts[LEADER]).T)
    initial = d0 <= 1.0 + RANGE_SLACK
    initial[LEADER] = False
    tag_time[initial] = 0.0
    tagger[initial] = LEADER
    eligible_from[initial] = 0

    guard = 4.0 * _max_pairwise(pts)
    rounds: List[RoundLog] = []
    R_prev, T, j = 0.0, 0.0, 0
    initial_tags = tuple((int(i), 0.0, LEADER) for i in np.flatnonzero(initial))

    while np.isinf(tag_time).any():
        if R_prev > guard:
            raise SimulationInvariantError(
                f"leader radius {R_prev} exceeds 4x the deployment diameter with robots still frozen")
        active_ids = [int(i) for i in np.flatnonzero(eligible_from <= j)]
        plan = circle_tag.plan_round(origin, j, R_prev, active_ids)
        movers = [LEADER] + [b.assigned_robot for b in plan.blocks]
        paths = [plan.leader_path] + list(plan.active_paths)
        if plan.blocks:
            activation[[m for m in movers[1:] if activation[m] < 0]] = j
        frozen = np.flatnonzero(np.isinf(tag_time))
        t_hit, who = earliest_entries(paths, movers, T, pts[frozen])
        found = np.isfinite(t_hit)
        ids = frozen[found]
        tag_time[ids] = t_hit[found]
        tagger[ids] = who[found]
        tag_round[ids] = j
        eligible_from[ids] = np.where(who[found] == LEADER, j + 1, j + 2)

        lengths = [p.total_length for p in paths]
        end = T + max(lengths)
        order = ids[np.lexsort((ids, tag_time[ids]))]
        tags = tuple((int(i), float(tag_time[i]), int(tagger[i])) for i in order)
        if j == 0:
            tags = initial_tags + tags
        rounds.append(RoundLog(
            round_index=j, k=plan.k, R_prev=R_prev, R_next=plan.R_next,
            start_time=T, end_time=end, leader_travel_time=lengths[0],
            cover_times=tuple(lengths[1:]),
            block_cover_time=circle_tag.cover_time(plan.blocks[0]) if plan.blocks else None,
            east_transit=plan.R_next - R_prev, active_ids=tuple(sorted(active_ids)), tags=tags))
        T, R_prev, j = end, plan.R_next, j + 1

    result = SimResult(
        makespan=float(tag_time.max()), rounds=tuple(rounds), tag_times=tag_time,
        taggers=tagger, tag_rounds=tag_round, activation_rounds=activation,
        positions=pts, origin=origin)
    if options.check_invariants:
        check_invariants(result)
    extras = {}
    if options.trace_dt is not None:
        extras["trace"] = sample_trace(result, options.trace_dt)
    if options.offline_variant is not None:
        from .offline import simulate_offline_reference
        extras["offline_reference"] = simulate_offline_reference(nd, options.offline_variant)
    if extras:
        result = replace(result, **extras)
    return result


def check_invariants(res: SimResult) -> None:
    def fail(msg):
        raise SimulationInvariantError(msg)

    if not np.isfinite(res.tag_times).all():
        fail("some robots were never tagged")
    if res.tag_times[LEADER] != 0.0:
        fail("leader tag time must be zero")
    if res.makespan != res.tag_times.max():
        fail("makespan differs from the last tag time")
    for rl in res.rounds:
        if rl.end_time - rl.start_time < rl.leader_travel_time - 1e-9:
            fail(f"round {rl.round_index} ends before the leader completes its path")
        slack = rl.prop1_slack(allowance=True)
        if slack is not None and slack < -PROP1_TOL * max(1.0, rl.duration):
            fail(f"round {rl.round_index} exceeds twice the block cover time plus the East transit")
    for i in range(1, res.n):
        a, tr = res.activation_rounds[i], res.tag_rounds[i]
        if a < 0:
            continue
        gap = 1 if res.taggers[i] == LEADER else 2
        if a < tr + gap:
            fail(f"robot {i} searched in round {a} but was found in round {tr}")


# ---------------------------------------------------------------- trace

ROLE_LEADER, ROLE_FROZEN, ROLE_FOLLOWER, ROLE_ACTIVE = "leader", "frozen", "follower", "active"


class _Replay:
    """Position lookup for any robot at any time, rebuilt from the round log."""

    def __init__(self, res: SimResult):
        self.res = res
        self.starts = [rl.start_time for rl in res.rounds]
        self.plans = [circle_tag.plan_round(res.origin, rl.round_index, rl.R_prev, rl.active_ids)
                      for rl in res.rounds]
        self.path_of = []
        for plan in self.plans:
            paths = {LEADER: plan.leader_path}
            paths.update((b.assigned_robot, p) for b, p in zip(plan.blocks, plan.active_paths))
            self.path_of.append(paths)

    def _round_at(self, t: float) -> int:
        if not self.starts:
            return -1
        i = int(np.searchsorted(self.starts, t, side="right")) - 1
        return max(i, 0)

    def _on_path(self, j: int, robot: int, t: float):
        path = self.path_of[j][robot]
        s = min(max(t - self.starts[j], 0.0), path.total_length)
        return point_at(path, s)

    def state(self, robot: int, t: float):
        res = self.res
        j = self._round_at(t)
        if robot == LEADER:
            pos = tuple(res.positions[LEADER]) if j < 0 else self._on_path(j, LEADER, t)
            return pos, ROLE_LEADER
        if t < res.tag_times[robot]:
            return tuple(res.positions[robot]), ROLE_FROZEN
        if j >= 0 and robot in self.path_of[j] and t >= self.starts[j]:
            return self._on_path(j, robot, t), ROLE_ACTIVE
        g, tr = int(res.taggers[robot]), int(res.tag_rounds[robot])
        if g != LEADER and tr >= 0 and t <= res.rounds[tr].end_time:
            return self._on_path(tr, g, t), ROLE_FOLLOWER
        pos = tuple(res.positions[LEADER]) if j < 0 else self._on_path(j, LEADER, t)
        return pos, ROLE_FOLLOWER


def sample_trace(res: SimResult, sample_dt: float) -> List[tuple]:
    """Rows ``(time, robot, x, y, role, event, tagger)`` in time order."""
    if not sample_dt > 0:
        raise ValueError("sample_dt must be positive")
    replay = _Replay(res)
    rows = []
    steps = int(math.floor(res.makespan / sample_dt + 1e-12))
    for s in range(steps + 1):
        t = s * sample_dt
        for i in range(res.n):
            (x, y), role = replay.state(i, t)
            rows.append((t, i, float(x), float(y), role, "sample", ""))
    for i in res.tag_order():
        if i == LEADER:
            continue
        t = float(res.tag_times[i])
        (x, y), role = replay.state(int(i), t)
        rows.append((t, int(i), float(x), float(y), role, "tag", int(res.taggers[i])))
    rows.sort(key=lambda row: (row[0], row[5] != "sample", row[1]))
    return rows


TRACE_HEADER = ("time", "robot", "x", "y", "role", "event", "tagger")


def export_trace(result: SimResult, sample_dt: float) -> bytes:
    rows = sample_trace(result, sample_dt)
    out = io.StringIO()
    out.write("# circletag trace; positions in units of the communication range\n")
    out.write(f"# n={result.n} makespan={result.makespan!r} sample_dt={sample_dt!r}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for t, i, x, y, role, event, g in rows:
        w.writerow((repr(float(t)), i, repr(x), repr(y), role, event, g))
    return out.getvalue().encode()


def read_tag_events(data: bytes) -> dict:
    """Tag times recovered from an exported trace, keyed by robot id."""
    lines = [ln for ln in data.decode().splitlines() if ln and not ln.startswith("#")]
    times = {}
    for row in csv.DictReader(lines):
        if row["event"] == "tag":
            times[int(row["robot"])] = float(row["time"])
    return times
