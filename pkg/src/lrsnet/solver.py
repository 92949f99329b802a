"""Three-block ADMM for the penalized pairwise logistic objective.

Splits the variables as x = (alpha, M, L, S) with consensus constraint
"M symmetric and M = L + S". The x-step separates into an inner gradient
descent for (alpha, M), an eigenvalue soft-threshold for L (conjugated by
the centering projection J on both sides), and an elementwise
soft-threshold for S. The z-step is the closed-form projection onto the
consensus set; the u-step is the plain dual update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .kernels import inner_gd
from .model import AdjacencyMatrix, Hyperparams, ModelParams, objective
from .selection import numerical_rank, sparse_support


class InnerSolveError(RuntimeError):
    """Inner gradient descent hit its iteration cap; carries the last iterate."""

    def __init__(self, message, alpha, M):
        super().__init__(message)
        self.alpha = alpha
        self.M = M


@dataclass
class Block:
    """One (alpha, M, L, S) tuple of ADMM variables."""

    alpha: float
    M: np.ndarray
    L: np.ndarray
    S: np.ndarray

    @staticmethod
    def zeros(n):
        return Block(0.0, np.zeros((n, n)), np.zeros((n, n)), np.zeros((n, n)))


@dataclass
class AdmmState:
    x: Block
    z: Block
    u: Block
    iteration: int = 0
    residual: float = np.inf


@dataclass
class FitResult:
    """Converged parameters plus bookkeeping.

    support_S holds the unordered index pairs (i < j) with |S_ij| above the
    reporting tolerance; rank_L is the numerical rank of L.
    """

    params: ModelParams
    objective: float
    rank_L: int
    support_S: set
    iters: int
    converged: bool
    residual_history: np.ndarray
    objective_history: np.ndarray | None = None


def prox_smooth(X: AdjacencyMatrix, v_alpha: float, V_M: np.ndarray,
                h: Hyperparams, warm=None):
    """Prox of the smooth loss at (v_alpha, V_M), solved by gradient descent.

    Minimizes the pairwise logistic loss plus (1/(2 lam)) times the squared
    distance to (v_alpha, V_M). Entries of M on or below the diagonal carry
    no smooth term, so they equal the corresponding V_M entries exactly; the
    inner iteration only moves alpha and the strict upper triangle.

    warm optionally supplies the starting (alpha, M); by default the solve
    starts at the prox point itself.
    """
    V_M = np.asarray(V_M, dtype=float)
    if not np.all(np.isfinite(V_M)):
        raise ValueError("V_M must be finite")
    n = X.n
    iu = np.triu_indices(n, k=1)
    if warm is None:
        w_alpha, w_mu = v_alpha, V_M[iu]
    else:
        w_alpha, w_mu = warm[0], np.asarray(warm[1], dtype=float)[iu]
    alpha, mu, iters, ok = inner_gd(
        np.ascontiguousarray(X.matrix[iu]), w_alpha,
        np.ascontiguousarray(w_mu), v_alpha,
        np.ascontiguousarray(V_M[iu]),
        1.0 / n, h.lam, h.inner_step, h.inner_tol, h.max_inner_iters)
    M = V_M.copy()
    M[iu] = mu
    if not ok:
        raise InnerSolveError(
            f"inner gradient descent did not reach {h.inner_tol} within "
            f"{h.max_inner_iters} iterations", alpha, M)
    return alpha, M


def prox_L(V: np.ndarray, threshold: float) -> np.ndarray:
    """Eigenvalue soft-threshold followed by centering conjugation.

    Eigendecomposes the symmetrized input, clamps eigenvalues at
    (lambda_i - threshold)_+, reconstructs, then conjugates by
    J = I - (1/n) 11^T on both sides. Output is symmetric, PSD and
    centered (J out J = out).
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError("V must be square")
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if V.size and np.max(np.abs(V - V.T)) > 1e-9:
        raise ValueError("V must be symmetric within 1e-9")
    Vs = (V + V.T) / 2.0
    # Only eigenpairs above the threshold survive; dsyevr subset skips the rest.
    w, Q = scipy.linalg.eigh(Vs, subset_by_value=(threshold, np.inf),
                             check_finite=False)
    if w.size == 0:
        return np.zeros_like(Vs)
    W = (Q * (w - threshold)) @ Q.T
    row = W.mean(axis=1, keepdims=True)
    col = W.mean(axis=0, keepdims=True)
    out = W - row - col + W.mean()
    return (out + out.T) / 2.0


def prox_S(V: np.ndarray, threshold: float) -> np.ndarray:
    """Elementwise soft-threshold off the diagonal; diagonal passes through."""
    V = np.asarray(V, dtype=float)
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    out = np.sign(V) * np.maximum(np.abs(V) - threshold, 0.0)
    np.fill_diagonal(out, np.diag(V))
    return out


def consensus_project(bar_alpha: float, bar_M: np.ndarray, bar_L: np.ndarray,
                      bar_S: np.ndarray):
    """Closed-form projection onto {M symmetric, M = L + S}.

    For symmetric bar_L, bar_S (always the case inside the ADMM loop) this
    is z_M = (bar_M + bar_M^T + bar_L + bar_S)/3 with the matching L/S
    splits; symmetrizing bar_L, bar_S first extends it to arbitrary
    inputs. z_S is computed as z_M - z_L so the consensus identity holds
    exactly in floating point.
    """
    z_M = (bar_M + bar_M.T
           + (bar_L + bar_L.T) / 2.0 + (bar_S + bar_S.T) / 2.0) / 3.0
    z_L = bar_L + (z_M - bar_L - bar_S) / 2.0
    z_S = z_M - z_L
    return bar_alpha, z_M, z_L, z_S


def fit(X: AdjacencyMatrix, h: Hyperparams, init: ModelParams | None = None,
        callback=None, record_objectives: bool = False) -> FitResult:
    """Run the ADMM until the split residual ||x_M - x_L - x_S||_F <= outer_tol.

    All blocks start at zero (or at `init` when given). Each inner solve is
    warm-started from the previous outer iteration's (alpha, M), which
    changes no fixed point. Returns converged=False with the best iterate
    when max_outer_iters is hit; callers decide whether to accept.
    """
    n = X.n
    iu = np.triu_indices(n, k=1)
    x_upper = np.ascontiguousarray(X.matrix[iu])
    inv_n = 1.0 / n
    thr_L = h.lam * h.delta
    thr_S = h.lam * h.gamma

    if init is None:
        x = Block.zeros(n)
        z = Block.zeros(n)
    else:
        M0 = init.L + init.S
        x = Block(init.alpha, M0.copy(), init.L.copy(), init.S.copy())
        z = Block(init.alpha, M0.copy(), init.L.copy(), init.S.copy())
    u = Block.zeros(n)

    warm_alpha = x.alpha
    warm_mu = np.ascontiguousarray(x.M[iu])

    residuals = []
    objectives = [] if record_objectives else None
    converged = False
    iters = 0

    for m in range(h.max_outer_iters):
        v_alpha = z.alpha - u.alpha
        V_M = z.M - u.M

        alpha, mu, inner_iters, ok = inner_gd(
            x_upper, warm_alpha, warm_mu, v_alpha,
            np.ascontiguousarray(V_M[iu]),
            inv_n, h.lam, h.inner_step, h.inner_tol, h.max_inner_iters)
        if not ok:
            M_bad = V_M.copy()
            M_bad[iu] = mu
            raise InnerSolveError(
                f"inner gradient descent stalled at outer iteration {m}",
                alpha, M_bad)
        x.alpha = alpha
        x.M = V_M
        x.M[iu] = mu
        warm_alpha, warm_mu = alpha, mu

        x.L = prox_L(z.L - u.L, thr_L)
        x.S = prox_S(z.S - u.S, thr_S)

        residual = float(np.linalg.norm(x.M - x.L - x.S))
        residuals.append(residual)
        iters = m + 1

        if record_objectives:
            objectives.append(objective(X, ModelParams(x.alpha, x.L, x.S), h))
        if callback is not None:
            callback(AdmmState(x, z, u, iteration=iters, residual=residual))
        if residual <= h.outer_tol:
            converged = True
            break

        bar_alpha = x.alpha + u.alpha
        bar_M = x.M + u.M
        bar_L = x.L + u.L
        bar_S = x.S + u.S
        z.alpha, z.M, z.L, z.S = consensus_project(bar_alpha, bar_M, bar_L, bar_S)
        u.alpha = bar_alpha - z.alpha
        u.M = bar_M - z.M
        u.L = bar_L - z.L
        u.S = bar_S - z.S

    params = ModelParams(x.alpha, x.L, x.S)
    return FitResult(
        params=params,
        objective=objective(X, params, h),
        rank_L=numerical_rank(x.L),
        support_S=sparse_support(x.S),
        iters=iters,
        converged=converged,
        residual_history=np.asarray(residuals),
        objective_history=None if objectives is None else np.asarray(objectives),
    )
