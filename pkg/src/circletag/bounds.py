"""Closed-form makespan bounds, ring statistics and Monte Carlo checks.

All lengths are in units of the communication range unless a function
takes an explicit deployment, in which case its own units are used.
Logarithms are natural.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np

from .deployment import Deployment, trial_seed, uniform_disk
from .spanning_tree import SpanningTreeMetrics, is_sparse

MIN_TRIALS = 100
RING_EPS = 1e-9


def _check_MH(M: float, H: int) -> None:
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    if H < 1:
        raise ValueError(f"H must be at least 1, got {H}")


def eq1_sparse_bound(M: float, H: int) -> float:
    """Sparse-configuration makespan bound ``M^2 (32 pi H + 4 pi)``."""
    _check_MH(M, H)
    return M * M * (32.0 * math.pi * H + 4.0 * math.pi)


def dense_asymptote(M: float, H: int) -> float:
    """Shape of the dense bound, ``max(M^2 H, (M H)^1.5)``, with unit constant."""
    _check_MH(M, H)
    return max(M * M * H, (M * H) ** 1.5)


def eq2_random_bound(L: float, n: int) -> float:
    """Expected makespan bound ``16 pi L^2 ln(n) / n`` for uniform deployments."""
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    return 16.0 * math.pi * L * L * math.log(n) / n


def rgg_threshold(n: int) -> float:
    """Connectivity radius ``sqrt(2 ln n / n)`` on a unit-area domain."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    return math.sqrt(2.0 * math.log(n) / n)


# ------------------------------------------------------------ RGG Monte Carlo

def _find(parent: np.ndarray, i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def is_connected(points: np.ndarray, radius: float) -> bool:
    """Union-find connectivity of the geometric graph on ``points``."""
    n = len(points)
    if n <= 1:
        return True
    diff = points[:, None, :] - points[None, :, :]
    close = np.hypot(diff[..., 0], diff[..., 1]) <= radius
    ii, jj = np.nonzero(np.triu(close, 1))
    parent = list(range(n))
    components = n
    for a, b in zip(ii.tolist(), jj.tolist()):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            parent[rb] = ra
            components -= 1
            if components == 1:
                return True
    return components == 1


@dataclass(frozen=True)
class RggReport:
    n: int
    trials: int
    radius: float
    connected_fraction: float
    target: float
    sigma: float

    @property
    def passed(self) -> bool:
        return self.connected_fraction >= self.target - 3.0 * self.sigma


def rgg_connectivity(n: int, trials: int, seed: int, radius: Optional[float] = None) -> RggReport:
    """Fraction of connected random geometric graphs on a unit-area disk.

    ``sigma`` is the binomial standard error at the target probability
    ``1 - 1/n^2``.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"at least {MIN_TRIALS} trials are required, got {trials}")
    radius = rgg_threshold(n) if radius is None else float(radius)
    disk_radius = 1.0 / math.sqrt(math.pi)
    hits = 0
    for t in range(trials):
        d = uniform_disk(n, disk_radius, trial_seed(seed, t))
        hits += is_connected(np.asarray(d.positions), radius)
    target = 1.0 - 1.0 / n ** 2
    sigma = math.sqrt(target * (1.0 - target) / trials)
    return RggReport(n, trials, radius, hits / trials, target, sigma)


# ------------------------------------------------------------ rings

@dataclass(frozen=True)
class RingPartition:
    L: float
    M: float
    N: int
    S: Tuple[int, ...]
    cumulative: Tuple[int, ...]


def ring_indices(dists: np.ndarray, M: float) -> np.ndarray:
    """Ring number for each distance; ring i holds radii in ((i-1)M, iM]."""
    return np.maximum(1, np.ceil(np.asarray(dists) / M - RING_EPS)).astype(np.int64)


def ring_partition(d: Deployment, M: float) -> RingPartition:
    if d.region_radius_L is None:
        raise ValueError("ring partition needs the deployment's region radius")
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    pts = np.asarray(d.positions)
    dists = np.hypot(*(pts[1:] - pts[0]).T)
    idx = ring_indices(dists, M)
    N = int(idx.max()) if len(idx) else 0
    S = np.bincount(idx, minlength=N + 1)[1:]
    return RingPartition(float(d.region_radius_L), float(M), N,
                         tuple(int(s) for s in S), tuple(int(c) for c in np.cumsum(S)))


@dataclass(frozen=True)
class RingRow:
    ring: int
    mean_S: float
    stderr_S: float
    bound_S: float
    mean_cum: float
    stderr_cum: float
    bound_cum: float
    flagged: bool


@dataclass(frozen=True)
class RingReport:
    n: int
    L: float
    M: float
    trials: int
    seed: int
    rows: Tuple[RingRow, ...]

    @property
    def flags(self) -> int:
        return sum(r.flagged for r in self.rows)

    def to_csv(self) -> str:
        return rows_to_csv([asdict(r) for r in self.rows])


def ring_bounds(n: int, L: float, M: float, i: int) -> Tuple[float, float]:
    """Per-ring and cumulative expected-count lower bounds, capped at ``n - 1``."""
    scale = n * M * M / (4.0 * L * L)
    cap = n - 1
    return min(scale * (2 * i - 1), cap), min(scale * i * i, cap)


def verify_ring_expectations(n: int, L: float, M: float, trials: int, seed: int) -> RingReport:
    """Monte Carlo means of ring counts with the leader at the disk center."""
    if trials < MIN_TRIALS:
        raise ValueError(f"at least {MIN_TRIALS} trials are required, got {trials}")
    if n < 2 or not L > 0 or not M > 0:
        raise ValueError("need n >= 2 and positive L, M")
    n_rings = max(1, math.ceil(L / M - RING_EPS))
    counts = np.zeros((trials, n_rings))
    for t in range(trials):
        d = uniform_disk(n, L, trial_seed(seed, t))
        pts = np.array(d.positions)
        pts[0] = 0.0
        idx = ring_indices(np.hypot(*pts[1:].T), M)
        counts[t] = np.bincount(idx, minlength=n_rings + 1)[1:n_rings + 1]
    cum = np.cumsum(counts, axis=1)
    root = math.sqrt(trials)
    rows = []
    for i in range(1, n_rings + 1):
        s, c = counts[:, i - 1], cum[:, i - 1]
        bs, bc = ring_bounds(n, L, M, i)
        ms, es = float(s.mean()), float(s.std(ddof=1) / root)
        mc, ec = float(c.mean()), float(c.std(ddof=1) / root)
        rows.append(RingRow(i, ms, es, bs, mc, ec, bc,
                            bool(ms + 3 * es < bs or mc + 3 * ec < bc)))
    return RingReport(n, float(L), float(M), trials, seed, tuple(rows))


# ------------------------------------------------------------ phases

@dataclass(frozen=True)
class Phase:
    t: int
    R_start: float
    R_end: float
    k_t: int
    first_round: int
    last_round: int

    @property
    def delta_minus(self) -> float:
        return self.R_end - self.R_start

    @property
    def delta_plus(self) -> float:
        return self.R_end + self.R_start


@dataclass(frozen=True)
class PhaseTrace:
    M: float
    phases: Tuple[Phase, ...]

    def __len__(self) -> int:
        return len(self.phases)


def phase_trace(result, M: float) -> PhaseTrace:
    """Group rounds into phases; phase t closes once the leader radius reaches t*M."""
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    phases: List[Phase] = []
    group: list = []
    t = 1

    def close(label):
        phases.append(Phase(label, group[0].R_prev, group[-1].R_next, max(r.k for r in group),
                            group[0].round_index, group[-1].round_index))

    for rl in result.rounds:
        group.append(rl)
        if rl.R_next >= t * M - RING_EPS:
            close(t)
            group = []
            while rl.R_next >= t * M - RING_EPS:
                t += 1
    if group:
        close(t)
    return PhaseTrace(float(M), tuple(phases))


# ------------------------------------------------------------ report

@dataclass(frozen=True)
class BoundsReport:
    n: int
    M: float
    H: int
    D: int
    sparse: bool
    lower_bound: float
    eq1_bound: Optional[float]
    dense_asymptote: Optional[float]
    eq2_bound: Optional[float]
    makespan: Optional[float] = None
    ratio_vs_lower: Optional[float] = None

    def as_row(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        lines = []
        for key, value in self.as_row().items():
            lines.append(f"{key:>16}: {'absent' if value is None else value}")
        return "\n".join(lines) + "\n"


def competitive_report(result, tree: SpanningTreeMetrics, d: Deployment) -> BoundsReport:
    """Bounds for one deployment; ``result`` may be ``None`` to skip the ratio."""
    r = d.comm_range_r
    M = tree.max_edge_M / r
    H = tree.height_H
    lower = max(M - 1.0, 0.0)
    eq1 = eq1_sparse_bound(M, H) if M > 0 and H >= 1 else None
    dense = dense_asymptote(M, H) if M > 0 and H >= 1 else None
    eq2 = None
    if d.region_radius_L is not None and d.n >= 2:
        eq2 = eq2_random_bound(d.region_radius_L / r, d.n)
    makespan = ratio = None
    if result is not None:
        makespan = float(result.makespan)
        if lower > 0:
            ratio = makespan / lower
    return BoundsReport(d.n, M, H, tree.diameter_D, is_sparse(d.n, 1.0, M), lower,
                        eq1, dense, eq2, makespan, ratio)


def loglog_slope(xs, ys) -> Optional[float]:
    """Least-squares slope of ``log y`` against ``log x``; ``None`` if undefined."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.asarray(ys, dtype=float)
    if len(x) < 2 or (y <= 0).any() or np.ptp(x) == 0:
        return None
    return float(np.polyfit(x, np.log(y), 1)[0])


def rows_to_csv(rows: List[dict]) -> str:
    if not rows:
        return ""
    out = io.StringIO()
    w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                    for k, v in row.items()})
    return out.getvalue()


__all__ = [
    "BoundsReport", "Phase", "PhaseTrace", "RggReport", "RingPartition", "RingReport", "RingRow",
    "competitive_report", "dense_asymptote", "eq1_sparse_bound", "eq2_random_bound",
    "is_connected", "loglog_slope", "phase_trace", "rgg_connectivity", "rgg_threshold",
    "ring_bounds", "ring_partition", "rows_to_csv", "verify_ring_expectations",
]
