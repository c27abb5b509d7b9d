"""Comparison cleaners: Local Outlier Factor and k-means distance thresholding.

Both work on min-max normalised (v, P) so that kW does not swamp m/s, and
both return a boolean array with True marking a point as abnormal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import TooFewPoints, WpcError
from .scada_io import Dataset


@dataclass(frozen=True)
class BaselineConfig:
    lof_k: int = 300
    lof_fraction: float = 0.10
    kmeans_k: int = 13
    kmeans_sigma: float = 2.0
    kmeans_tol: float = 1e-6
    kmeans_max_iter: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.lof_k < 1:
            raise WpcError(f"lof_k must be >= 1, got {self.lof_k}")
        if not 0 < self.lof_fraction < 1:
            raise WpcError(f"lof_fraction must be in (0, 1), got {self.lof_fraction}")
        if self.kmeans_k < 1:
            raise WpcError(f"kmeans_k must be >= 1, got {self.kmeans_k}")


def normalized_features(dataset: Dataset) -> np.ndarray:
    """(N, 2) array of v and P each rescaled to [0, 1]; a constant column maps to 0."""
    cols = []
    for a in (dataset.v, dataset.P):
        lo, hi = float(a.min()), float(a.max())
        cols.append((a - lo) / (hi - lo) if hi > lo else np.zeros_like(a))
    return np.column_stack(cols)


def _neighbours(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Distances and indices of each point's k nearest other points."""
    dist, idx = cKDTree(X).query(X, k=k + 1)
    n = len(X)
    # drop the point itself; with duplicates it need not sit in column 0
    is_self = idx == np.arange(n)[:, None]
    missing = ~is_self.any(axis=1)
    is_self[missing, -1] = True
    keep = ~is_self
    return dist[keep].reshape(n, k), idx[keep].reshape(n, k)


def lof_scores(X: np.ndarray, k: int) -> np.ndarray:
    """Local outlier factor of every row of ``X`` using its k nearest neighbours."""
    if len(X) <= k:
        raise TooFewPoints(f"LOF needs more than k={k} points, got {len(X)}")
    dist, idx = _neighbours(X, k)
    k_distance = dist[:, -1]
    reach = np.maximum(dist, k_distance[idx])
    lrd = 1.0 / (reach.mean(axis=1) + 1e-10)
    return lrd[idx].mean(axis=1) / lrd


def top_fraction(scores: np.ndarray, fraction: float) -> np.ndarray:
    """Flag exactly ceil(fraction * N) highest scores; ties keep input order."""
    n = len(scores)
    count = min(n, math.ceil(round(fraction * n, 9)))
    flags = np.zeros(n, dtype=bool)
    flags[np.argsort(-scores, kind="stable")[:count]] = True
    return flags


def lof_clean(dataset: Dataset, cfg: BaselineConfig | None = None) -> np.ndarray:
    cfg = cfg or BaselineConfig()
    return top_fraction(lof_scores(normalized_features(dataset), cfg.lof_k), cfg.lof_fraction)


def _sq_dist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [X[rng.integers(len(X))]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        pick = rng.integers(len(X)) if total <= 0 else rng.choice(len(X), p=d2 / total)
        centers.append(X[pick])
        d2 = np.minimum(d2, ((X - X[pick]) ** 2).sum(axis=1))
    return np.array(centers)


def kmeans(
    X: np.ndarray, k: int, seed: int = 0, tol: float = 1e-6, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations from a k-means++ start; returns (centroids, assignment)."""
    if len(X) < k:
        raise TooFewPoints(f"k-means needs at least k={k} points, got {len(X)}")
    rng = np.random.default_rng(seed)
    C = kmeans_pp_init(X, k, rng)
    for _ in range(max_iter):
        assign = _sq_dist(X, C).argmin(axis=1)
        new = C.copy()
        for j in range(k):
            members = X[assign == j]
            if len(members):  # an empty cluster keeps its centroid
                new[j] = members.mean(axis=0)
        shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
        C = new
        if shift < tol:
            break
    return C, _sq_dist(X, C).argmin(axis=1)


def kmeans_clean(dataset: Dataset, cfg: BaselineConfig | None = None) -> np.ndarray:
    """Flag points farther from their centroid than the cluster's mean + sigma * std distance."""
    cfg = cfg or BaselineConfig()
    X = normalized_features(dataset)
    C, assign = kmeans(X, cfg.kmeans_k, cfg.seed, cfg.kmeans_tol, cfg.kmeans_max_iter)
    d = np.sqrt(((X - C[assign]) ** 2).sum(axis=1))
    flags = np.zeros(len(X), dtype=bool)
    for j in range(cfg.kmeans_k):
        members = assign == j
        if members.any():
            dj = d[members]
            flags[members] = dj > dj.mean() + cfg.kmeans_sigma * dj.std()
    return flags
