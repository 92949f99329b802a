"""Model primitives: edge probabilities, likelihoods, penalties, diagnostics.

Everything here is a pure function of its inputs; matrices are plain
float64 numpy arrays wrapped in light dataclasses that enforce the
structural invariants (symmetry, binary entries, zero diagonal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

SYM_TOL = 1e-10


def _as_square(a, name="matrix"):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


def _check_symmetric(a, name, tol=SYM_TOL):
    if a.size and np.max(np.abs(a - a.T)) > tol:
        raise ValueError(f"{name} must be symmetric within {tol}")


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """Symmetric binary matrix with zero diagonal; entry (i, j) = 1 iff linked."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix, "adjacency")
        if not np.all((m == 0.0) | (m == 1.0)):
            raise ValueError("adjacency entries must be 0 or 1")
        if not np.array_equal(m, m.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(m) != 0.0):
            raise ValueError("adjacency diagonal must be zero")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def nnz(self) -> int:
        """Number of nonzero entries, both triangles counted."""
        return int(self.matrix.sum())

    def degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=1).astype(int)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Intercept alpha plus low-rank component L and sparse component S."""

    alpha: float
    L: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        L = _as_square(self.L, "L")
        S = _as_square(self.S, "S")
        if L.shape != S.shape:
            raise ValueError("L and S must have the same shape")
        _check_symmetric(L, "L")
        _check_symmetric(S, "S")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "S", S)

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @staticmethod
    def zeros(n: int) -> "ModelParams":
        return ModelParams(0.0, np.zeros((n, n)), np.zeros((n, n)))


@dataclass(frozen=True)
class Hyperparams:
    """Penalty weights and solver schedule.

    gamma weights the elementwise L1 penalty on S, delta the nuclear penalty
    on L. The remaining fields fix the ADMM schedule: prox scale lam,
    constant inner step size, inner/outer stopping tolerances and iteration
    caps.
    """

    gamma: float
    delta: float
    lam: float = 0.5
    inner_step: float = 0.05
    inner_tol: float = 1e-9
    outer_tol: float = 1e-7
    max_outer_iters: int = 20000
    max_inner_iters: int = 50000

    def __post_init__(self):
        for name in ("gamma", "delta", "lam", "inner_step", "inner_tol",
                     "outer_tol", "max_outer_iters", "max_inner_iters"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DiagnosticConfig:
    """Constants for the theory diagnostics.

    kappa bounds the spikiness of L (max |L_ij| <= kappa / n), C bounds the
    intercept (|alpha| <= C * kappa), and tau is the strong-convexity
    constant of the all-pairs likelihood (see strong_convexity_tau).
    """

    kappa: float
    C: float
    tau: float

    def __post_init__(self):
        if self.kappa <= 0 or self.C <= 0 or self.tau <= 0:
            raise ValueError("kappa, C and tau must all be positive")


def edge_probability(alpha: float, l: float, s: float) -> float:
    """Logistic edge probability sigma(alpha + l + s), overflow-safe."""
    t = alpha + l + s
    if not math.isfinite(t):
        raise ValueError("edge_probability requires finite inputs")
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def _check_dims(X: AdjacencyMatrix, shape):
    if X.matrix.shape != shape:
        raise ValueError(
            f"dimension mismatch: adjacency is {X.matrix.shape}, params are {shape}")


def log_likelihood(X: AdjacencyMatrix, params: ModelParams) -> float:
    """Pairwise log-likelihood summed over i < j.

    alpha * sum X_ij + (1/2) X.L + (1/2) X.S - sum log(1 + e^(alpha+L+S)),
    evaluated on the strict upper triangle only, so diagonal entries of L
    and S never enter.
    """
    _check_dims(X, params.L.shape)
    iu = np.triu_indices(X.n, k=1)
    theta = params.alpha + params.L[iu] + params.S[iu]
    x = X.matrix[iu]
    return float(np.dot(x, theta) - np.sum(np.logaddexp(0.0, theta)))


def log_likelihood_full_pairs(X: AdjacencyMatrix, theta: np.ndarray) -> float:
    """All-pairs log-likelihood sum_{i,j} { X_ij Theta_ij - log(1+e^Theta_ij) }.

    Includes the diagonal and both triangles; not scaled by 1/n. Used only
    by the diagnostics.
    """
    theta = _as_square(theta, "theta")
    _check_dims(X, theta.shape)
    return float(np.sum(X.matrix * theta) - np.sum(np.logaddexp(0.0, theta)))


def l1_offdiagonal(S: np.ndarray) -> float:
    """Sum of |S_ij| over i != j (both triangles, diagonal excluded)."""
    a = np.abs(np.asarray(S, dtype=float))
    return float(a.sum() - np.trace(a))


def nuclear_norm_psd(L: np.ndarray) -> float:
    """Nuclear norm of a (near-)PSD symmetric matrix.

    Computed as the sum of eigenvalues clamped at zero, which absorbs the
    -1e-12-scale negative noise the prox step can leave behind.
    """
    w = np.linalg.eigvalsh(np.asarray(L, dtype=float))
    return float(np.sum(np.clip(w, 0.0, None)))


def objective(X: AdjacencyMatrix, params: ModelParams, h: Hyperparams) -> float:
    """Penalized objective: -(1/n) log-likelihood + gamma ||S||_1 + delta ||L||_*."""
    return (-log_likelihood(X, params) / X.n
            + h.gamma * l1_offdiagonal(params.S)
            + h.delta * nuclear_norm_psd(params.L))


def smooth_gradient(X: AdjacencyMatrix, alpha: float, M: np.ndarray):
    """Gradient of the smooth part of the objective in (alpha, M).

    The smooth term reads only the strict upper triangle of M, so the
    returned matrix gradient is exactly zero on the diagonal and below.
    """
    M = _as_square(M, "M")
    _check_dims(X, M.shape)
    n = X.n
    iu = np.triu_indices(n, k=1)
    resid = (expit(alpha + M[iu]) - X.matrix[iu]) / n
    g_alpha = float(resid.sum())
    g_M = np.zeros_like(M)
    g_M[iu] = resid
    return g_alpha, g_M


def probability_matrix(params: ModelParams) -> np.ndarray:
    """Elementwise edge probabilities sigma(alpha + L + S).

    Symmetric; the diagonal is computed like any other entry but is unused
    by sampling and likelihood (self-edges do not exist).
    """
    return expit(params.alpha + params.L + params.S)


def error_metric(fit: ModelParams, truth: ModelParams) -> float:
    """Squared Frobenius error summed across the three components.

    n^2 (alpha_fit - alpha_true)^2 + ||dL||_F^2 + ||dS||_F^2.
    """
    if fit.L.shape != truth.L.shape:
        raise ValueError("dimension mismatch between fit and truth")
    n = fit.n
    da = fit.alpha - truth.alpha
    return float(n * n * da * da
                 + np.sum((fit.L - truth.L) ** 2)
                 + np.sum((fit.S - truth.S) ** 2))


def regularization_floor(X: AdjacencyMatrix, P_star: np.ndarray,
                         cfg: DiagnosticConfig):
    """Smallest theory-sanctioned penalty weights (delta_min, gamma_min).

    delta_min = 2 ||(X - P*)/n||_op, gamma_min = 2 ||(X - P*)/n||_inf
    + 4 kappa tau (C n + 1)/n, with ||.||_inf the maximum absolute entry.
    """
    P_star = _as_square(P_star, "P_star")
    _check_dims(X, P_star.shape)
    R = (X.matrix - P_star) / X.n
    delta_min = 2.0 * float(np.linalg.norm(R, 2))
    gamma_min = (2.0 * float(np.max(np.abs(R)))
                 + 4.0 * cfg.kappa * cfg.tau * (cfg.C * X.n + 1.0) / X.n)
    return delta_min, gamma_min


def strong_convexity_tau(theta: np.ndarray) -> float:
    """Lowest Hessian eigenvalue of the all-pairs likelihood at theta.

    The Hessian is diagonal with entries (1/n) sigma(t) (1 - sigma(t)), so
    the minimum diagonal entry is returned. Underflows to 0 for |t| >~ 745.
    """
    theta = _as_square(theta, "theta")
    n = theta.shape[0]
    sig = expit(theta)
    return float(np.min(sig * (1.0 - sig)) / n)
