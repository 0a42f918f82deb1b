"""Density clustering with DBSCAN semantics and deterministic labels.

A point is core when at least ``min_points`` points (itself included) lie
within Euclidean distance ``eps``. Clusters are the connected components of
core points; a non-core point within ``eps`` of some core point joins the
cluster of its nearest core point (lowest index on ties); the rest is noise
(-1). Labels are renumbered 0..T-1 by cluster size, largest first, ties
broken by the smallest member index.
"""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy.spatial import cKDTree


def renumber_by_size(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    out = np.full(len(labels), -1, dtype=int)
    clusters = [c for c in np.unique(labels) if c != -1]
    order = sorted(clusters, key=lambda c: (-int(np.sum(labels == c)), int(np.argmax(labels == c))))
    for new, old in enumerate(order):
        out[labels == old] = new
    return out


def dbscan(points: np.ndarray, eps: float, min_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (labels, core mask) for ``points``."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=bool)
    tree = cKDTree(pts)
    neighbors = [sorted(nb) for nb in tree.query_ball_point(pts, r=eps)]
    core = np.array([len(nb) >= min_points for nb in neighbors])

    labels = np.full(n, -1, dtype=int)
    next_label = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = next_label
        queue = deque([i])
        while queue:
            j = queue.popleft()
            for k in neighbors[j]:
                if core[k] and labels[k] == -1:
                    labels[k] = next_label
                    queue.append(k)
        next_label += 1

    for i in np.flatnonzero(~core):
        cores = [k for k in neighbors[i] if core[k]]
        if cores:
            d2 = np.sum((pts[cores] - pts[i]) ** 2, axis=1)
            labels[i] = labels[cores[int(np.argmin(d2))]]
    return renumber_by_size(labels), core


def cluster_embeddings(points: np.ndarray, eps: float, min_points: int) -> np.ndarray:
    return dbscan(points, eps, min_points)[0]


def merge_small_clusters(labels: np.ndarray, min_size: int) -> np.ndarray:
    """Relabel clusters smaller than ``min_size`` as noise, then renumber."""
    labels = np.asarray(labels).copy()
    for c in np.unique(labels):
        if c != -1 and np.sum(labels == c) < min_size:
            labels[labels == c] = -1
    return renumber_by_size(labels)
