import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrsnet.model import AdjacencyMatrix, Hyperparams
from lrsnet.selection import (EvalReport, GridRangeError, SelectionRow,
                              SelectionTable, best_match_mismatches,
                              estimate_K_elbow, evaluate_metrics,
                              grid_search, heuristic_select,
                              information_criteria, numerical_rank,
                              scree_eigenvalues, sparse_support)

import oracles


def adjacency(n, edges):
    A = np.zeros((n, n))
    for i, j in edges:
        A[i, j] = A[j, i] = 1.0
    return AdjacencyMatrix(A)


def complete_graph(n):
    A = np.ones((n, n)) - np.eye(n)
    return AdjacencyMatrix(A)


class TestRankAndSupport:
    def test_zero_matrix_rank_zero(self):
        assert numerical_rank(np.zeros((4, 4))) == 0

    def test_clean_rank(self):
        L = np.diag([5.0, 3.0, 0.0, 0.0])
        assert numerical_rank(L) == 2

    def test_relative_threshold(self):
        L = np.diag([1.0, 2e-6, 1e-8])
        assert numerical_rank(L) == 2

    def test_support_excludes_diagonal_and_tiny(self):
        S = np.diag([4.0, 4.0, 4.0])
        S[0, 1] = S[1, 0] = 1e-9
        S[0, 2] = S[2, 0] = 0.5
        assert sparse_support(S) == {(0, 2)}


class TestScree:
    def test_complete_graph_spectrum(self):
        eigs = scree_eigenvalues(complete_graph(5), count=5)
        assert eigs[0] == pytest.approx(4.0, abs=1e-10)
        assert np.allclose(eigs[1:], -1.0, atol=1e-10)

    def test_empty_graph(self):
        eigs = scree_eigenvalues(adjacency(6, []), count=6)
        assert np.all(eigs == 0.0)

    def test_two_disjoint_cliques(self):
        edges = [(i, j) for i in range(5) for j in range(i + 1, 5)]
        edges += [(i, j) for i in range(5, 10) for j in range(i + 1, 10)]
        eigs = scree_eigenvalues(adjacency(10, edges), count=4)
        assert eigs[0] == pytest.approx(4.0, abs=1e-10)
        assert eigs[1] == pytest.approx(4.0, abs=1e-10)
        assert eigs[2] == pytest.approx(-1.0, abs=1e-10)

    def test_count_validated(self):
        with pytest.raises(ValueError):
            scree_eigenvalues(adjacency(3, []), count=4)

    def test_trace_identity(self):
        X = adjacency(7, [(0, 1), (2, 3), (4, 5), (5, 6), (0, 6)])
        eigs = scree_eigenvalues(X, count=7)
        assert eigs.sum() == pytest.approx(0.0, abs=1e-9)


class TestElbow:
    def test_clear_elbow_at_three(self):
        assert estimate_K_elbow([10, 9.5, 9, 0.1, 0.05, 0.01]) == 3

    def test_single_dominant(self):
        assert estimate_K_elbow([5, 0.1, 0.09, 0.08]) == 1

    def test_flat_spectrum_warns(self):
        with pytest.warns(UserWarning):
            assert estimate_K_elbow([1.0, 1.0, 1.0, 1.0]) == 1

    def test_too_short(self):
        with pytest.raises(ValueError):
            estimate_K_elbow([2.0, 1.0])

    def test_presets_recover_K(self):
        # occasional single-network misses are tolerated (overlap classes
        # can blur the case-5 spectrum on some draws)
        from lrsnet.synthgen import (generate_ground_truth, preset_for_case,
                                     sample_adjacency)
        true_K = [3, 4, 5, 3, 3, 3]
        correct = 0
        for case in range(1, 7):
            gt = generate_ground_truth(preset_for_case(case, seed=40 + case))
            X = sample_adjacency(gt, 90 + case)
            eigs = scree_eigenvalues(X, min(15, X.n))
            correct += int(estimate_K_elbow(eigs) == true_K[case - 1])
        assert correct >= 5


class TestInformationCriteria:
    def test_m_size_example(self):
        _, _, m = information_criteria(0.0, 3, 9, 30)
        assert m == 97

    def test_intercept_only(self):
        _, _, m = information_criteria(0.0, 0, 0, 30)
        assert m == 1

    def test_aic_bic_identity(self):
        n, ll = 30, -123.4
        bic, aic, m = information_criteria(ll, 3, 9, n)
        assert aic - bic == pytest.approx(m * (2 - math.log(n * (n - 1) / 2)))

    def test_combinatorial_count(self):
        # acceptance criterion: m_size equals the independent count
        for n in range(2, 51, 7):
            for K in range(0, 6):
                for s in range(0, 21, 5):
                    _, _, m = information_criteria(0.0, K, s, n)
                    assert m == oracles.m_size_combinatorial(n, K, s)

    def test_monotone_in_s_and_rank(self):
        n = 20
        for K in range(4):
            m1 = information_criteria(0.0, K, 3, n)[2]
            m2 = information_criteria(0.0, K, 4, n)[2]
            m3 = information_criteria(0.0, K + 1, 3, n)[2]
            assert m2 > m1
            assert m3 > m1


class TestGridSearch:
    def test_single_cell_matches_direct_fit(self):
        from lrsnet.model import log_likelihood
        from lrsnet.solver import fit
        X = adjacency(5, [(0, 1), (1, 2), (3, 4)])
        h = Hyperparams(gamma=1.0, delta=1.0, max_outer_iters=400)
        table = grid_search(X, [0.5], [0.5], h)
        assert len(table.rows) == 1
        row = table.rows[0]
        direct = fit(X, Hyperparams(gamma=0.5, delta=0.5,
                                    max_outer_iters=400))
        assert row.rank_L == direct.rank_L
        assert row.s_count == len(direct.support_S)
        assert row.loglik == pytest.approx(
            log_likelihood(X, direct.params), rel=1e-12)

    def test_row_order_gamma_outer(self):
        X = adjacency(4, [(0, 1), (2, 3)])
        h = Hyperparams(gamma=1, delta=1, max_outer_iters=50)
        table = grid_search(X, [0.1, 1.0], [0.2, 2.0], h)
        assert [(r.gamma, r.delta) for r in table.rows] == \
            [(0.1, 0.2), (0.1, 2.0), (1.0, 0.2), (1.0, 2.0)]

    def test_huge_penalties_empty_model(self):
        X = adjacency(4, [(0, 1), (1, 2), (2, 3)])
        h = Hyperparams(gamma=1, delta=1)
        table = grid_search(X, [50.0], [50.0], h)
        assert table.rows[0].rank_L == 0
        assert table.rows[0].s_count == 0

    def test_empty_grid_rejected(self):
        X = adjacency(3, [(0, 1)])
        with pytest.raises(ValueError):
            grid_search(X, [], [0.1], Hyperparams(gamma=1, delta=1))

    def test_csv_round_trip(self, tmp_path):
        rows = [SelectionRow(0.1, 0.2, 3, 9, -12.5, 30.0, 25.0, True),
                SelectionRow(0.3, 0.4, 0, 0, -50.0, 101.0, 102.0, False)]
        table = SelectionTable(rows)
        path = tmp_path / "sel.csv"
        table.to_csv(path)
        back = SelectionTable.from_csv(path)
        assert back.rows == rows


class TestHeuristicSelect:
    def make_table(self, specs):
        rows = [SelectionRow(g, d, r, s, -1.0, 0.0, 0.0, True)
                for g, d, r, s in specs]
        return SelectionTable(rows)

    def test_single_eligible_row(self):
        table = self.make_table([(0.1, 0.2, 3, 12), (0.1, 0.3, 2, 12)])
        assert heuristic_select(table, 3, 1000) == (0.1, 0.2)

    def test_mode_wins(self):
        table = self.make_table([
            (0.1, 0.1, 3, 12), (0.1, 0.2, 3, 12), (0.2, 0.1, 3, 12),
            (0.2, 0.2, 3, 40)])
        g, d = heuristic_select(table, 3, 1000)
        assert (g, d) == (0.2, 0.1)  # modal s=12, then largest gamma, delta

    def test_window_filters(self):
        # s outside [1e-4 nnz, 1e-1 nnz] is ineligible
        table = self.make_table([(0.1, 0.1, 3, 500), (0.2, 0.2, 3, 20)])
        assert heuristic_select(table, 3, 1000) == (0.2, 0.2)

    def test_empty_filter_raises(self):
        table = self.make_table([(0.1, 0.1, 2, 12)])
        with pytest.raises(GridRangeError):
            heuristic_select(table, 3, 1000)

    def test_selected_satisfies_filter(self):
        rng = np.random.default_rng(0)
        specs = [(float(g), float(d), int(rng.integers(0, 6)),
                  int(rng.integers(0, 80)))
                 for g in rng.random(6) for d in rng.random(6)]
        table = self.make_table(specs)
        nnz = 600
        try:
            g, d = heuristic_select(table, 3, nnz)
        except GridRangeError:
            return
        row = table.row_for(g, d)
        assert row.rank_L == 3
        assert 1e-4 * nnz <= row.s_count <= 1e-1 * nnz


class TestMetrics:
    class FitView:
        def __init__(self, rank, support):
            self.rank_L = rank
            self.support_S = support

    class TruthView:
        def __init__(self, n, K, pairs):
            self.n = n
            self.K = K
            self.adhoc_pairs = pairs

    def test_exact_recovery(self):
        truth = self.TruthView(6, 2, [(0, 3), (1, 4)])
        fit = self.FitView(2, {(0, 3), (1, 4)})
        ev = evaluate_metrics(fit, truth, [0, 0, 0, 1, 1, 1],
                              [1, 1, 1, 0, 0, 0])
        assert (ev.m1, ev.m2, ev.m3, ev.m4) == (1, 1.0, 0.0, 0.0)

    def test_empty_fit_support(self):
        truth = self.TruthView(6, 2, [(0, 3), (1, 4)])
        fit = self.FitView(2, set())
        ev = evaluate_metrics(fit, truth, [0] * 6, [0] * 6)
        assert ev.m2 == 0.0
        assert ev.m3 == 0.0

    def test_vacuous_truth_flagged(self):
        truth = self.TruthView(4, 1, [])
        fit = self.FitView(1, {(0, 1)})
        with pytest.warns(UserWarning):
            ev = evaluate_metrics(fit, truth, [0] * 4, [0] * 4)
        assert ev.m2 == 1.0
        assert ev.m2_vacuous

    def test_false_discovery_rate(self):
        truth = self.TruthView(5, 2, [(0, 1)])
        fit = self.FitView(2, {(0, 1), (2, 3), (2, 4)})
        ev = evaluate_metrics(fit, truth, [0] * 5, [0] * 5)
        assert ev.m2 == 1.0
        assert ev.m3 == pytest.approx(2 / 9)

    def test_m4_permutation_invariance(self):
        rng = np.random.default_rng(1)
        true = rng.integers(0, 3, 30)
        found = (true + 1) % 3  # pure relabeling
        truth = self.TruthView(30, 3, [(0, 1)])
        fit = self.FitView(3, {(0, 1)})
        ev = evaluate_metrics(fit, truth, found, true)
        assert ev.m4 == 0.0

    def test_m1_compares_to_topic_count(self):
        truth = self.TruthView(6, 3, [(0, 3)])
        assert evaluate_metrics(self.FitView(3, set()), truth,
                                [0] * 6, [0] * 6).m1 == 1
        assert evaluate_metrics(self.FitView(2, set()), truth,
                                [0] * 6, [0] * 6).m1 == 0


class TestBestMatch:
    def test_identity(self):
        assert best_match_mismatches([0, 1, 2], [5, 7, 9]) == 0

    def test_merged_cluster(self):
        # 2 found clusters vs 3 true classes of 4: one class unmatched
        found = [0] * 4 + [0] * 4 + [1] * 4
        true = [0] * 4 + [1] * 4 + [2] * 4
        assert best_match_mismatches(found, true) == 4

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 5000))
    def test_hungarian_equals_exhaustive(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 20))
        kf = int(rng.integers(1, 5))
        kt = int(rng.integers(1, 5))
        found = rng.integers(0, kf, n)
        true = rng.integers(0, kt, n)
        assert best_match_mismatches(found, true) == \
            oracles.exhaustive_mismatches(found, true)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            best_match_mismatches([0, 1], [0, 1, 2])
