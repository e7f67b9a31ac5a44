"""Greedy covering and single-linkage components for cluster-set estimation."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist, squareform, pdist


def greedy_cover(points: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Cover ``points`` (n, d) by balls of ``radius`` in visiting order.

    Returns (representatives (k, d), assignment (n,)): each point is within
    ``radius`` of its assigned representative, and representatives are
    pairwise more than ``radius`` apart.  Deterministic in point order.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot cover an empty point set")
    reps = [pts[0]]
    assignment = np.zeros(n, dtype=int)
    start, block = 1, 4096
    while start < n:
        stop = min(start + block, n)
        chunk = pts[start:stop]
        dists = cdist(chunk, np.asarray(reps))
        nearest = np.argmin(dists, axis=1)
        covered = dists[np.arange(len(chunk)), nearest] <= radius
        if covered.all():
            assignment[start:stop] = nearest
            start = stop
            continue
        first_out = int(np.argmin(covered))  # first False
        assignment[start : start + first_out] = nearest[:first_out]
        reps.append(chunk[first_out])
        assignment[start + first_out] = len(reps) - 1
        start = start + first_out + 1
    return np.asarray(reps), assignment


def single_linkage_labels(points: np.ndarray, threshold: float) -> np.ndarray:
    """Connected-component labels of the epsilon graph at ``threshold``."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("no points to label")
    if n == 1:
        return np.zeros(1, dtype=int)
    adj = squareform(pdist(pts)) <= threshold
    _, labels = connected_components(csr_matrix(adj), directed=False)
    return labels


def component_gap(points: np.ndarray, labels: np.ndarray) -> float:
    """Smallest distance between points carrying different labels."""
    pts = np.asarray(points, dtype=float)
    if len(set(labels.tolist())) < 2:
        return float("inf")
    dists = squareform(pdist(pts))
    different = labels[:, None] != labels[None, :]
    return float(dists[different].min())
