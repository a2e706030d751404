"""Offline reference makespans with full knowledge of robot positions.

Both variants use single-robot hand-offs: an awake robot drives straight at
one frozen robot and stops as soon as it is within range.  ``exact`` searches
every wake-up tree (branch and bound, n <= 10); ``greedy`` sends each free
robot to the frozen robot it can reach first.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from .deployment import Deployment

EXACT_MAX_N = 10


def _approach(p, q, t, r=1.0):
    """Arrival time and stopping point when driving from ``p`` towards ``q``."""
    d = math.hypot(q[0] - p[0], q[1] - p[1])
    if d <= r:
        return t, p
    f = (d - r) / d
    return t + d - r, (p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1]))


def greedy_makespan(pts) -> float:
    pts = [tuple(map(float, p)) for p in pts]
    n = len(pts)
    claimed = [False] * n
    claimed[0] = True
    heap = [(0.0, 0, pts[0])]
    makespan = 0.0
    remaining = n - 1
    while heap and remaining:
        t, i, pos = heapq.heappop(heap)
        best = None
        for j in range(n):
            if not claimed[j]:
                arrive, stop = _approach(pos, pts[j], t)
                if best is None or arrive < best[0]:
                    best = (arrive, j, stop)
        if best is None:
            continue
        arrive, j, stop = best
        claimed[j] = True
        remaining -= 1
        makespan = max(makespan, arrive)
        heapq.heappush(heap, (arrive, i, stop))
        heapq.heappush(heap, (arrive, j, pts[j]))
    return makespan


def exact_makespan(pts) -> float:
    pts = [tuple(map(float, p)) for p in pts]
    n = len(pts)
    if n > EXACT_MAX_N:
        raise ValueError(f"exact offline search is limited to n <= {EXACT_MAX_N}, got {n}")
    if n == 1:
        return 0.0
    dmat = [[math.hypot(a[0] - b[0], a[1] - b[1]) for b in pts] for a in pts]
    best = [greedy_makespan(pts)]

    def lower_bound(awake, frozen, last, span):
        lb = span
        for f in frozen:
            q = pts[f]
            direct = min(t + max(0.0, math.hypot(q[0] - p[0], q[1] - p[1]) - 1.0) for p, t in awake)
            relay = min((dmat[g][f] for g in frozen if g != f), default=math.inf)
            lb = max(lb, min(direct, last + max(0.0, relay - 1.0)))
        return lb

    def search(awake, frozen, last, span):
        if not frozen:
            best[0] = min(best[0], span)
            return
        if lower_bound(awake, frozen, last, span) >= best[0]:
            return
        moves = []
        for a, (p, t) in enumerate(awake):
            for f in frozen:
                arrive, stop = _approach(p, pts[f], t)
                if arrive >= last:
                    moves.append((arrive, a, f, stop))
        moves.sort()
        for arrive, a, f, stop in moves:
            if max(span, arrive) >= best[0]:
                break
            nxt = list(awake)
            nxt[a] = (stop, arrive)
            nxt.append((pts[f], arrive))
            search(nxt, frozen - {f}, arrive, max(span, arrive))

    search([(pts[0], 0.0)], frozenset(range(1, n)), 0.0, 0.0)
    return best[0]


def simulate_offline_reference(d: Deployment, variant: str = "greedy") -> float:
    """Offline makespan in units of the communication range."""
    pts = np.asarray(d.normalized().positions)
    if variant == "greedy":
        return greedy_makespan(pts)
    if variant == "exact":
        return exact_makespan(pts)
    raise ValueError(f"unknown offline variant {variant!r}")
