"""Euclidean minimum spanning tree and the quantities M, H, D derived from it."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

Edge = Tuple[int, int, float]

BRUTE_FORCE_MAX_N = 8


@dataclass(frozen=True)
class SpanningTreeMetrics:
    edges: Tuple[Edge, ...]
    max_edge_M: float
    height_H: int
    diameter_D: int

    @property
    def n(self) -> int:
        return len(self.edges) + 1

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))


def _positions(deployment) -> np.ndarray:
    pts = getattr(deployment, "positions", deployment)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("deployment is empty")
    if not np.isfinite(pts).all():
        raise ValueError("deployment has non-finite coordinates")
    return pts


def distance_matrix(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def build_mst(deployment) -> SpanningTreeMetrics:
    """Dense Prim rooted at the leader (index 0).

    Ties between equal weights go to the lexicographically smaller
    ``(min index, max index)`` pair, which makes the tree unique.
    """
    pts = _positions(deployment)
    n = len(pts)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best_w = np.hypot(*(pts - pts[0]).T)
    best_from = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    edges: List[Edge] = []
    for _ in range(n - 1):
        cand = np.flatnonzero(~in_tree)
        w = best_w[cand]
        lo = np.minimum(best_from[cand], cand)
        hi = np.maximum(best_from[cand], cand)
        pick = cand[np.lexsort((hi, lo, w))[0]]
        u = int(best_from[pick])
        edges.append((min(u, int(pick)), max(u, int(pick)), float(best_w[pick])))
        in_tree[pick] = True
        d = np.hypot(*(pts - pts[pick]).T)
        # strict improvement, or equal weight with a smaller (min, max) pair
        cur_lo = np.minimum(best_from, idx)
        cur_hi = np.maximum(best_from, idx)
        new_lo = np.minimum(pick, idx)
        new_hi = np.maximum(pick, idx)
        better = (d < best_w) | ((d == best_w) & ((new_lo < cur_lo) | ((new_lo == cur_lo) & (new_hi < cur_hi))))
        better &= ~in_tree
        best_w = np.where(better, d, best_w)
        best_from = np.where(better, pick, best_from)
    return metrics_from_edges(n, edges)


def metrics_from_edges(n: int, edges) -> SpanningTreeMetrics:
    edges = tuple(sorted((min(i, j), max(i, j), float(w)) for i, j, w in edges))
    if len(edges) != n - 1:
        raise ValueError(f"a spanning tree on {n} vertices needs {n - 1} edges")
    adj: List[List[int]] = [[] for _ in range(n)]
    for i, j, _ in edges:
        adj[i].append(j)
        adj[j].append(i)
    depth = _bfs_depths(adj, 0)
    if (depth < 0).any():
        raise ValueError("edges do not connect all vertices")
    far = int(np.argmax(depth))
    diameter = int(_bfs_depths(adj, far).max())
    max_edge = max((w for _, _, w in edges), default=0.0)
    return SpanningTreeMetrics(edges, max_edge, int(depth.max()), diameter)


def _bfs_depths(adj, root) -> np.ndarray:
    depth = np.full(len(adj), -1, dtype=np.int64)
    depth[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                queue.append(v)
    return depth


def is_sparse(n: int, r: float, M: float) -> bool:
    return n * r <= M


@lru_cache(maxsize=None)
def prufer_trees(n: int) -> np.ndarray:
    """Edge lists of every labelled tree on ``n`` vertices, shape (n**(n-2), n-1, 2)."""
    if n == 1:
        return np.zeros((1, 0, 2), dtype=np.int64)
    if n == 2:
        return np.array([[[0, 1]]], dtype=np.int64)
    seqs = np.stack(np.meshgrid(*[np.arange(n)] * (n - 2), indexing="ij"), -1).reshape(-1, n - 2)
    count = len(seqs)
    rows = np.arange(count)
    degree = np.ones((count, n), dtype=np.int64)
    np.add.at(degree, (np.repeat(rows, n - 2), seqs.ravel()), 1)
    edges = np.empty((count, n - 1, 2), dtype=np.int64)
    for step in range(n - 2):
        leaf = np.argmax(degree == 1, axis=1)
        edges[:, step, 0] = leaf
        edges[:, step, 1] = seqs[:, step]
        degree[rows, leaf] -= 1
        degree[rows, seqs[:, step]] -= 1
    last = np.argsort(degree != 1, axis=1, kind="stable")[:, :2]
    edges[:, n - 2] = last
    return edges


def brute_force_mst(deployment) -> SpanningTreeMetrics:
    """Exhaustive search over all Cayley trees; a test oracle for small inputs."""
    pts = _positions(deployment)
    n = len(pts)
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 1:
        return SpanningTreeMetrics((), 0.0, 0, 0)
    trees = prufer_trees(n)
    w = distance_matrix(pts)[trees[..., 0], trees[..., 1]]
    best = int(np.argmin(w.sum(axis=1)))
    return metrics_from_edges(n, [(int(i), int(j), float(x)) for (i, j), x in zip(trees[best], w[best])])


def enumerated_tree_weights(deployment) -> Tuple[np.ndarray, np.ndarray]:
    """Total weight and bottleneck of every spanning tree (n <= 8)."""
    pts = _positions(deployment)
    n = len(pts)
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"enumeration is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if n == 1:
        return np.zeros(1), np.zeros(1)
    trees = prufer_trees(n)
    w = distance_matrix(pts)[trees[..., 0], trees[..., 1]]
    return w.sum(axis=1), w.max(axis=1)
