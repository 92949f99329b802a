"""Synthetic network generator: block factor structure, optional overlapping
topic memberships, ad-hoc cross-block links, and Bernoulli edge sampling.

All randomness flows through a seeded numpy Generator with a fixed draw
order (intercept, overlap index sets, overlap topic subsets, factor
weights, ad-hoc host sets, ad-hoc magnitudes), so fixtures are
bit-reproducible."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .model import AdjacencyMatrix, ModelParams


@dataclass(frozen=True)
class ScenarioConfig:
    """Generator settings for one synthetic network.

    n nodes split into K equal blocks; n_l nodes share l topics and n_m
    nodes share m topics (either group may be empty); s_count ad-hoc pairs
    split evenly over the C(K, 2) block pairs.
    """

    n: int
    K: int
    n_l: int = 0
    l: int = 2
    n_m: int = 0
    m: int = 3
    s_count: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n <= 0 or self.K <= 0:
            raise ValueError("n and K must be positive")
        if self.n % self.K != 0:
            raise ValueError(f"n = {self.n} must be divisible by K = {self.K}")
        if self.n_l < 0 or self.n_m < 0 or self.n_l + self.n_m > self.n:
            raise ValueError("overlap group sizes must be >= 0 and sum to <= n")
        if self.n_l > 0 and not 1 < self.l <= self.K:
            raise ValueError("need 1 < l <= K when n_l > 0")
        if self.n_m > 0 and not 1 < self.m <= self.K:
            raise ValueError("need 1 < m <= K when n_m > 0")
        if self.n_l > 0 and self.n_m > 0 and not self.l < self.m:
            raise ValueError("need l < m when both overlap groups are non-empty")
        pairs = self.K * (self.K - 1) // 2
        if self.s_count < 0 or (pairs and self.s_count % pairs != 0):
            raise ValueError(
                f"s_count = {self.s_count} must divide evenly over the "
                f"{pairs} block pairs")

    @property
    def block_size(self) -> int:
        return self.n // self.K


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Generator output: true parameters plus the bookkeeping needed to score
    a fit (topic sets, overlap groups, ad-hoc pair list)."""

    alpha_star: float
    F_star: np.ndarray          # K x n, centered (rows sum to zero)
    D_star: np.ndarray          # K positive weights
    S_star: np.ndarray
    P_star: np.ndarray
    L_star: np.ndarray
    labels: tuple               # per-node frozenset of topics (pre-centering)
    overlap_l: np.ndarray
    overlap_m: np.ndarray
    adhoc_pairs: tuple          # (i, j) with i < j
    config: ScenarioConfig

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.alpha_star, self.L_star, self.S_star)

    def cluster_labels(self) -> np.ndarray:
        """Canonical integer class per node, one class per distinct topic set.

        Singleton sets come first in topic order, then larger sets sorted by
        (size, members)."""
        distinct = sorted({s for s in self.labels},
                          key=lambda s: (len(s), tuple(sorted(s))))
        ids = {s: i for i, s in enumerate(distinct)}
        return np.array([ids[s] for s in self.labels], dtype=int)


def generate_ground_truth(cfg: ScenarioConfig) -> GroundTruth:
    """Draw (alpha*, F*, D*, S*, P*) for one scenario configuration."""
    rng = np.random.default_rng(cfg.seed)
    n, K = cfg.n, cfg.K
    size = cfg.block_size
    block_of = np.repeat(np.arange(K), size)

    alpha_star = float(rng.uniform(-11.0, -10.0))

    overlap_l = np.sort(rng.choice(n, size=cfg.n_l, replace=False)) \
        if cfg.n_l else np.empty(0, dtype=int)
    rest = np.setdiff1d(np.arange(n), overlap_l)
    overlap_m = np.sort(rng.choice(rest, size=cfg.n_m, replace=False)) \
        if cfg.n_m else np.empty(0, dtype=int)
    overlap = set(overlap_l.tolist()) | set(overlap_m.tolist())

    topic_sets = {}
    for j in overlap_l:
        topic_sets[int(j)] = frozenset(
            int(t) for t in rng.choice(K, size=cfg.l, replace=False))
    for j in overlap_m:
        topic_sets[int(j)] = frozenset(
            int(t) for t in rng.choice(K, size=cfg.m, replace=False))

    D_star = rng.uniform(19.0, 20.0, size=K)

    pairs = K * (K - 1) // 2
    per_pair = cfg.s_count // pairs if pairs else 0
    hosts = []
    for k in range(K):
        eligible = np.array([j for j in range(k * size, (k + 1) * size)
                             if j not in overlap], dtype=int)
        if eligible.size < per_pair:
            raise ValueError(
                f"block {k} keeps only {eligible.size} pure nodes but "
                f"{per_pair} ad-hoc hosts are required")
        hosts.append(rng.choice(eligible, size=per_pair, replace=False)
                     if per_pair else np.empty(0, dtype=int))

    S_star = np.zeros((n, n))
    adhoc = []
    for p in range(K):
        for q in range(p + 1, K):
            for r in range(per_pair):
                i, j = int(hosts[p][r]), int(hosts[q][r])
                v = rng.uniform(19.0, 20.0)
                S_star[i, j] = v
                S_star[j, i] = v
                adhoc.append((min(i, j), max(i, j)))

    F = np.zeros((K, n))
    labels = []
    for j in range(n):
        topics = topic_sets.get(j, frozenset({int(block_of[j])}))
        labels.append(topics)
        for t in topics:
            F[t, j] = 1.0
    F_centered = F - F.mean(axis=1, keepdims=True)

    L_star = F_centered.T @ (D_star[:, None] * F_centered)
    L_star = (L_star + L_star.T) / 2.0
    P_star = expit(alpha_star + L_star + S_star)

    return GroundTruth(
        alpha_star=alpha_star, F_star=F_centered, D_star=D_star,
        S_star=S_star, P_star=P_star, L_star=L_star, labels=tuple(labels),
        overlap_l=overlap_l, overlap_m=overlap_m, adhoc_pairs=tuple(adhoc),
        config=cfg)


def sample_adjacency(gt: GroundTruth, seed: int) -> AdjacencyMatrix:
    """Draw the upper triangle X_ij ~ Bernoulli(P*_ij) row-major and mirror."""
    rng = np.random.default_rng(seed)
    n = gt.n
    iu = np.triu_indices(n, k=1)
    u = rng.random(iu[0].size)
    x = np.zeros((n, n))
    x[iu] = (u < gt.P_star[iu]).astype(float)
    x += x.T
    return AdjacencyMatrix(x)


def scenario_presets() -> list:
    """The six benchmark configurations.

    Scenario 1 (all nodes pure): (n, K, |S*|) = (30, 3, 9), (80, 4, 18),
    (120, 5, 30). Scenario 2 (overlapping topics, K = 3, |S*| = 18):
    (n, n_l, n_m) = (120, 0, 10), (210, 50, 0), (210, 10, 10) with l = 2
    shared topics and m = 3 shared topics.
    """
    return [
        ScenarioConfig(n=30, K=3, s_count=9),
        ScenarioConfig(n=80, K=4, s_count=18),
        ScenarioConfig(n=120, K=5, s_count=30),
        ScenarioConfig(n=120, K=3, n_l=0, l=2, n_m=10, m=3, s_count=18),
        ScenarioConfig(n=210, K=3, n_l=50, l=2, n_m=0, m=3, s_count=18),
        ScenarioConfig(n=210, K=3, n_l=10, l=2, n_m=10, m=3, s_count=18),
    ]


def preset_for_case(case: int, seed: int = 0) -> ScenarioConfig:
    """Case numbering 1-6: scenario 1 holds cases 1-3, scenario 2 cases 4-6."""
    presets = scenario_presets()
    if not 1 <= case <= len(presets):
        raise ValueError(f"case must be in 1..{len(presets)}")
    return replace(presets[case - 1], seed=seed)
