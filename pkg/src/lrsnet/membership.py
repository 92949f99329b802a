"""Node membership from the fitted low-rank component: spectral embedding,
k-means with k-means++ restarts, and the 2-D principal projection used for
overlapping-topic networks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .selection import numerical_rank


@dataclass(frozen=True, eq=False)
class Embedding:
    """Leading eigenvectors of L-hat, one per column, eigenvalues descending."""

    vectors: np.ndarray
    eigenvalues: np.ndarray
    rank_deficient: bool = False


@dataclass(frozen=True, eq=False)
class MembershipResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    restart_inertias: tuple
    projected: np.ndarray | None = None


def _fix_signs(E: np.ndarray) -> np.ndarray:
    # Deterministic sign: the largest-magnitude entry of each column is
    # positive (first index on ties).
    E = E.copy()
    for j in range(E.shape[1]):
        i = int(np.argmax(np.abs(E[:, j])))
        if E[i, j] < 0:
            E[:, j] = -E[:, j]
    return E


def spectral_embedding(L_hat: np.ndarray, K: int) -> Embedding:
    """Top-K eigenvectors of L_hat by eigenvalue, sign-normalized.

    Requesting more columns than the numerical rank still returns K columns
    but flags the embedding (and warns)."""
    L_hat = np.asarray(L_hat, dtype=float)
    n = L_hat.shape[0]
    if not 1 <= K <= n:
        raise ValueError(f"K must be in 1..{n}")
    w, Q = np.linalg.eigh((L_hat + L_hat.T) / 2.0)
    order = np.argsort(-w, kind="stable")
    vals = w[order[:K]]
    E = _fix_signs(Q[:, order[:K]])
    deficient = K > numerical_rank(L_hat)
    if deficient:
        warnings.warn(f"requested K = {K} exceeds the numerical rank of L-hat")
    return Embedding(vectors=E, eigenvalues=vals, rank_deficient=deficient)


def _kmeans_once(P: np.ndarray, k: int, rng, max_iter: int):
    n = P.shape[0]
    # k-means++ seeding
    centers = np.empty((k, P.shape[1]))
    centers[0] = P[rng.integers(n)]
    d2 = np.sum((P - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[c] = P[idx]
        d2 = np.minimum(d2, np.sum((P - centers[c]) ** 2, axis=1))

    labels = np.full(n, -1, dtype=int)
    for _ in range(max_iter):
        dist = np.sum((P[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dist, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = P[mask].mean(axis=0)
            else:
                # Re-seed an emptied cluster at the worst-served point.
                far = int(np.argmax(np.min(dist, axis=1)))
                centers[c] = P[far]
    dist = np.sum((P - centers[labels]) ** 2, axis=1)
    return labels, centers, float(dist.sum())


def cluster_nodes(points, k: int, seed: int, restarts: int = 20,
                  max_iter: int = 300) -> MembershipResult:
    """k-means with k-means++ initialization; best inertia over restarts.

    Accepts an Embedding or a raw coordinate array. Deterministic given the
    seed; the best restart is the first one attaining the minimal inertia.
    """
    P = points.vectors if isinstance(points, Embedding) else np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n = P.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k = {k} exceeds the number of points {n}")
    rng = np.random.default_rng(seed)
    best = None
    inertias = []
    for r in range(restarts):
        labels, centers, inertia = _kmeans_once(P, k, rng, max_iter)
        inertias.append(inertia)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    return MembershipResult(labels=labels, centers=centers, inertia=inertia,
                            restart_inertias=tuple(inertias))


def project_principal(points) -> np.ndarray:
    """Project embedding rows onto their first two principal components.

    Rows are centered first; output columns are ordered by explained
    variance and sign-normalized for reproducibility."""
    E = points.vectors if isinstance(points, Embedding) else np.asarray(points, dtype=float)
    if E.ndim != 2 or E.shape[1] < 2:
        raise ValueError("need at least 2 embedding columns to project")
    centered = E - E.mean(axis=0, keepdims=True)
    _, _, Vt = np.linalg.svd(centered, full_matrices=False)
    coords = centered @ Vt[:2].T
    return _fix_signs(coords)
