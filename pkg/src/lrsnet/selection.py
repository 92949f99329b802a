"""Model selection: scree-based rank estimate, penalty grid search, the
heuristic selection rule, BIC/AIC, and the M1-M4 evaluation metrics."""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import AdjacencyMatrix, Hyperparams, log_likelihood

RANK_REL_TOL = 1e-6
SUPPORT_TOL = 1e-8


class GridRangeError(RuntimeError):
    """No grid cell satisfies the heuristic filter; the ranges need adjusting."""


def numerical_rank(L: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """Count eigenvalues above rel_tol * max(largest eigenvalue, 1e-12)."""
    w = np.linalg.eigvalsh(np.asarray(L, dtype=float))
    thr = rel_tol * max(float(w[-1]), 1e-12)
    return int(np.sum(w > thr))


def sparse_support(S: np.ndarray, tol: float = SUPPORT_TOL) -> set:
    """Unordered index pairs (i < j) with |S_ij| > tol; diagonal excluded."""
    S = np.asarray(S, dtype=float)
    i, j = np.where(np.abs(np.triu(S, k=1)) > tol)
    return set(zip(i.tolist(), j.tolist()))


def scree_eigenvalues(X: AdjacencyMatrix, count: int = 15) -> np.ndarray:
    """Top `count` eigenvalues of the adjacency matrix, algebraic, descending."""
    if count > X.n:
        raise ValueError(f"count = {count} exceeds node count {X.n}")
    w = np.linalg.eigvalsh(X.matrix)
    return w[::-1][:count].copy()


def estimate_K_elbow(eigs) -> int:
    """Automated elbow pick: the index preceding the largest eigenvalue drop.

    The scree procedure is visual in origin; this rule is a default and the
    CLI accepts a manual override. A flat spectrum yields 1 with a warning.
    """
    e = np.asarray(eigs, dtype=float)
    if e.size < 3:
        raise ValueError("need at least 3 eigenvalues")
    gaps = e[:-1] - e[1:]
    if np.max(gaps) <= 1e-12 * max(1.0, abs(float(e[0]))):
        warnings.warn("flat spectrum: no elbow, returning K = 1")
        return 1
    return int(np.argmax(gaps)) + 1


@dataclass(frozen=True)
class SelectionRow:
    gamma: float
    delta: float
    rank_L: int
    s_count: int
    loglik: float
    bic: float
    aic: float
    converged: bool


@dataclass
class SelectionTable:
    """One row per (gamma, delta) grid cell, gamma outer, delta inner."""

    rows: list = field(default_factory=list)

    def row_for(self, gamma: float, delta: float) -> SelectionRow:
        for r in self.rows:
            if r.gamma == gamma and r.delta == delta:
                return r
        raise KeyError(f"no row for gamma={gamma}, delta={delta}")

    def best_bic(self) -> SelectionRow:
        return min(self.rows, key=lambda r: r.bic)

    def best_aic(self) -> SelectionRow:
        return min(self.rows, key=lambda r: r.aic)

    HEADER = ("gamma", "delta", "rank_L", "s_count", "loglik", "bic", "aic",
              "converged")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.HEADER)
            for r in self.rows:
                w.writerow([repr(r.gamma), repr(r.delta), r.rank_L, r.s_count,
                            repr(r.loglik), repr(r.bic), repr(r.aic),
                            int(r.converged)])

    @classmethod
    def from_csv(cls, path):
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != cls.HEADER:
                raise ValueError(f"unexpected selection table header: {header}")
            for rec in reader:
                rows.append(SelectionRow(
                    float(rec[0]), float(rec[1]), int(rec[2]), int(rec[3]),
                    float(rec[4]), float(rec[5]), float(rec[6]),
                    bool(int(rec[7]))))
        return cls(rows)


def information_criteria(loglik: float, rank_L: int, s_count: int, n: int):
    """(bic, aic, m_size) for a fitted model.

    m_size counts the free parameters: sparse support, K orthonormal
    columns with their K eigenvalues, and the intercept:
    s + n K - K(K-1)/2 + 1.
    """
    if rank_L < 0 or s_count < 0 or n < 0:
        raise ValueError("inputs must be non-negative")
    K = rank_L
    m_size = s_count + n * K - K * (K - 1) // 2 + 1
    pairs = n * (n - 1) / 2.0
    bic = -2.0 * loglik + m_size * math.log(pairs)
    aic = -2.0 * loglik + 2.0 * m_size
    return bic, aic, m_size


def _fit_cell(args):
    # Top-level so ProcessPoolExecutor can pickle it.
    matrix, gamma, delta, h = args
    from .solver import fit

    X = AdjacencyMatrix(matrix)
    hh = Hyperparams(gamma=gamma, delta=delta, lam=h.lam,
                     inner_step=h.inner_step, inner_tol=h.inner_tol,
                     outer_tol=h.outer_tol, max_outer_iters=h.max_outer_iters,
                     max_inner_iters=h.max_inner_iters)
    res = fit(X, hh)
    loglik = log_likelihood(X, res.params)
    bic, aic, _ = information_criteria(loglik, res.rank_L, len(res.support_S),
                                       X.n)
    return SelectionRow(gamma, delta, res.rank_L, len(res.support_S), loglik,
                        bic, aic, res.converged)


def grid_search(X: AdjacencyMatrix, gammas, deltas, h: Hyperparams,
                n_jobs: int = 1) -> SelectionTable:
    """Fit every (gamma, delta) pair independently.

    Cells are independent, so they can run on multiple workers; the table is
    assembled in (gamma outer, delta inner) order regardless of completion
    order. Non-converged cells are marked, not dropped.
    """
    gammas = list(gammas)
    deltas = list(deltas)
    if not gammas or not deltas:
        raise ValueError("gamma and delta lists must be non-empty")
    cells = [(X.matrix, g, d, h) for g in gammas for d in deltas]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_fit_cell, cells))
    else:
        rows = [_fit_cell(c) for c in cells]
    return SelectionTable(rows)


def default_grid(steps: int = 8):
    """Log-spaced default search grid: gamma in [1e-4, 1e-1], delta in [1e-3, 1]."""
    gammas = np.logspace(-4, -1, steps)
    deltas = np.logspace(-3, 0, steps)
    return gammas, deltas


def heuristic_select(table: SelectionTable, K_hat: int, x_nnz: int):
    """Pick (gamma, delta) among cells with rank K_hat and a plausible |S|.

    Eligible cells satisfy rank_L == K_hat and
    1e-4 ||X||_0 <= s_count <= 1e-1 ||X||_0; among them the modal s_count
    wins, with ties broken by largest gamma, then largest delta.
    """
    if not table.rows:
        raise GridRangeError("selection table is empty")
    lo, hi = 1e-4 * x_nnz, 1e-1 * x_nnz
    eligible = [r for r in table.rows
                if r.rank_L == K_hat and lo <= r.s_count <= hi]
    if not eligible:
        raise GridRangeError(
            f"no grid cell has rank(L) = {K_hat} with |S| in "
            f"[{lo:.4g}, {hi:.4g}]; adjust the gamma/delta grid ranges and "
            "search again")
    freq = Counter(r.s_count for r in eligible)
    top = max(freq.values())
    modal = {s for s, c in freq.items() if c == top}
    best = max((r for r in eligible if r.s_count in modal),
               key=lambda r: (r.gamma, r.delta))
    return best.gamma, best.delta


def _zoom_ranges(table: SelectionTable, K_hat: int, x_nnz: int,
                 gammas, deltas):
    """One round of range adjustment when the heuristic filter came up empty.

    The rank of L falls as delta grows, so a missing rank = K_hat cell means
    the transition fell between grid points: re-span delta across the
    tightest bracketing pair. Support counts fall as gamma grows, so an
    |S| window miss shifts the gamma range toward the window."""
    gammas = np.asarray(sorted(gammas), dtype=float)
    deltas = np.asarray(sorted(deltas), dtype=float)
    by_cell = {(r.gamma, r.delta): r for r in table.rows}
    lo, hi = 1e-4 * x_nnz, 1e-1 * x_nnz

    ranks = np.array([[by_cell[(g, d)].rank_L for d in deltas]
                      for g in gammas])
    counts = np.array([[by_cell[(g, d)].s_count for d in deltas]
                       for g in gammas])

    new_deltas = deltas
    if not (ranks == K_hat).any():
        brackets = []
        for i in range(len(gammas)):
            row = ranks[i]
            for j in range(len(deltas) - 1):
                if row[j] > K_hat > row[j + 1]:
                    brackets.append((deltas[j], deltas[j + 1]))
        if brackets:
            d_lo = min(b[0] for b in brackets)
            d_hi = max(b[1] for b in brackets)
            new_deltas = np.geomspace(d_lo, d_hi, len(deltas))
        elif ranks.max() < K_hat:
            new_deltas = deltas / (deltas[-1] / deltas[0])
        else:
            new_deltas = deltas * (deltas[-1] / deltas[0])

    new_gammas = gammas
    window_hit = ((ranks == K_hat) & (counts >= lo) & (counts <= hi)).any()
    if not window_hit:
        span = gammas[-1] / gammas[0]
        if counts.min() > hi:
            new_gammas = gammas * span
        elif counts.max() < lo:
            new_gammas = gammas / span
    return new_gammas, new_deltas


def adaptive_select(X: AdjacencyMatrix, K_hat: int, h: Hyperparams,
                    gammas, deltas, rounds: int = 3, n_jobs: int = 1):
    """Grid search with the documented range-adjustment loop.

    Runs the heuristic on a grid; when no cell has rank K_hat inside the
    |S| window, the ranges are zoomed toward the rank transition and the
    window and the search repeats (at most `rounds` grids). Returns
    (gamma, delta, table of the successful round)."""
    gammas = np.asarray(gammas, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    last_error = None
    for _ in range(rounds):
        table = grid_search(X, gammas, deltas, h, n_jobs=n_jobs)
        try:
            gamma, delta = heuristic_select(table, K_hat, X.nnz())
            return gamma, delta, table
        except GridRangeError as exc:
            last_error = exc
            gammas, deltas = _zoom_ranges(table, K_hat, X.nnz(), gammas,
                                          deltas)
    raise GridRangeError(
        f"range adjustment exhausted after {rounds} rounds: {last_error}")


@dataclass(frozen=True)
class EvalReport:
    """M1-M4 plus the fitted rank. m2_vacuous flags an empty true support."""

    m1: int
    m2: float
    m3: float
    m4: float
    rank_found: int
    m2_vacuous: bool = False


def best_match_mismatches(labels_found, labels_true) -> int:
    """Misclassified count under the best label matching.

    Exhaustive over permutations when there are at most 8 label values on
    the larger side, Hungarian assignment above that; the two agree.
    """
    labels_found = np.asarray(labels_found)
    labels_true = np.asarray(labels_true)
    if labels_found.shape != labels_true.shape:
        raise ValueError("label vectors must have the same length")
    n = labels_found.size
    fa, f_idx = np.unique(labels_found, return_inverse=True)
    ta, t_idx = np.unique(labels_true, return_inverse=True)
    conf = np.zeros((fa.size, ta.size), dtype=int)
    np.add.at(conf, (f_idx, t_idx), 1)
    big = max(fa.size, ta.size)
    if big <= 8:
        small = min(fa.size, ta.size)
        C = conf if fa.size <= ta.size else conf.T
        best = 0
        for perm in itertools.permutations(range(big), small):
            best = max(best, sum(C[i, perm[i]] for i in range(small)))
    else:
        ri, ci = linear_sum_assignment(-conf)
        best = int(conf[ri, ci].sum())
    return n - int(best)


def evaluate_metrics(fit_result, truth, labels_found, labels_true) -> EvalReport:
    """Score a fit against generator ground truth.

    M1: fitted rank equals the true topic count. M2: fraction of true
    ad-hoc pairs recovered in the sparse support. M3: fraction of true-zero
    pairs spuriously flagged. M4: misclassified-node fraction under the
    best label matching.
    """
    n = truth.n
    support = fit_result.support_S
    true_pairs = set(truth.adhoc_pairs)
    m1 = int(fit_result.rank_L == truth.K)
    vacuous = len(true_pairs) == 0
    if vacuous:
        warnings.warn("true sparse support is empty; M2 set to 1 by convention")
        m2 = 1.0
    else:
        m2 = len(support & true_pairs) / len(true_pairs)
    zero_pairs = n * (n - 1) // 2 - len(true_pairs)
    m3 = len(support - true_pairs) / zero_pairs if zero_pairs else 0.0
    m4 = best_match_mismatches(labels_found, labels_true) / n
    return EvalReport(m1=m1, m2=float(m2), m3=float(m3), m4=float(m4),
                      rank_found=fit_result.rank_L, m2_vacuous=vacuous)
