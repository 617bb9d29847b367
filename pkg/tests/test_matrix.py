import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_newton.matrix import (
    NonConvergence,
    NotPositiveDefinite,
    SingularMatrix,
    SymMatrix,
    eig_sym,
    exact_condition_number,
    logdet_spd,
    solve_classical,
    sparsity_report,
)

from oracles import (
    brute_prefix_count,
    char_poly_eigenvalues_2x2,
    cofactor_det,
    gauss_jordan_solve,
    random_spd,
)


class TestSymMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            SymMatrix(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="asymmetry"):
            SymMatrix(np.array([[1.0, 2.0], [1.0, 1.0]]))

    def test_accepts_tiny_asymmetry_and_symmetrizes(self):
        a = np.array([[1.0, 2.0], [2.0 + 1e-14, 1.0]])
        m = SymMatrix(a)
        assert np.array_equal(m.entries, m.entries.T)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            SymMatrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_entries_read_only(self):
        m = SymMatrix.identity(2)
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0


class TestSolveClassical:
    def test_identity(self):
        x = solve_classical(SymMatrix.identity(3), np.array([1.0, 2.0, 3.0]))
        assert np.allclose(x, [1.0, 2.0, 3.0], rtol=0, atol=0)

    def test_diagonal(self):
        x = solve_classical(SymMatrix.diagonal([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0], rtol=1e-15)

    def test_matches_gauss_jordan_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            A = random_spd(rng, 8)
            b = rng.standard_normal(8)
            x = solve_classical(SymMatrix(A), b)
            x_ref = gauss_jordan_solve(A, b)
            assert np.linalg.norm(x - x_ref) <= 1e-9 * np.linalg.norm(x_ref)

    def test_singular_raises(self):
        a = np.ones((3, 3))  # rank 1
        with pytest.raises(SingularMatrix):
            solve_classical(SymMatrix(a), np.ones(3))

    def test_rhs_length_mismatch(self):
        with pytest.raises(ValueError):
            solve_classical(SymMatrix.identity(3), np.ones(4))

    def test_residual_property_1000_random_spd(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 65))
            kappa = float(10 ** rng.uniform(0, 4))
            A = random_spd(rng, n, kappa)
            b = rng.standard_normal(n)
            x = solve_classical(SymMatrix(A), b)
            resid = np.abs(A @ x - b).max() / np.abs(b).max()
            assert resid <= 1e-8


class TestEigSym:
    def test_diagonal(self):
        spec = eig_sym(SymMatrix.diagonal([3.0, 1.0, 2.0]))
        assert np.array_equal(spec.eigenvalues, [3.0, 2.0, 1.0])

    def test_identity(self):
        spec = eig_sym(SymMatrix.identity(5))
        assert np.array_equal(spec.eigenvalues, np.ones(5))

    def test_2x2_vs_characteristic_polynomial(self):
        # [[2,1],[1,2]]: lambda^2 - 4 lambda + 3 -> roots 3, 1
        roots = np.roots([1.0, -4.0, 3.0])
        spec = eig_sym(SymMatrix(np.array([[2.0, 1.0], [1.0, 2.0]])))
        assert np.allclose(sorted(spec.eigenvalues), sorted(roots), rtol=1e-12)
        assert np.allclose(spec.eigenvalues, [3.0, 1.0], rtol=1e-12)

    def test_random_2x2_vs_char_poly_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b, d = rng.standard_normal(3)
            hi, lo = char_poly_eigenvalues_2x2(a, b, d)
            ev = eig_sym(SymMatrix(np.array([[a, b], [b, d]]))).eigenvalues
            scale = max(abs(hi), abs(lo), 1e-12)
            assert abs(ev[0] - hi) <= 1e-9 * scale
            assert abs(ev[1] - lo) <= 1e-9 * scale

    def test_trace_and_logdet_consistency(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(2, 33))
            A = random_spd(rng, n)
            m = SymMatrix(A)
            ev = eig_sym(m).eigenvalues
            assert abs(np.trace(A) - ev.sum()) <= 1e-9 * n * abs(np.trace(A))
            assert abs(logdet_spd(m) - np.log(ev).sum()) <= 1e-8 * max(
                1.0, abs(np.log(ev).sum())
            )

    def test_nonconvergence_with_zero_budget(self):
        m = SymMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
        with pytest.raises(NonConvergence):
            eig_sym(m, max_sweeps=0)

    def test_zero_budget_fine_for_diagonal(self):
        spec = eig_sym(SymMatrix.diagonal([2.0, 1.0]), max_sweeps=0)
        assert np.array_equal(spec.eigenvalues, [2.0, 1.0])


class TestExactConditionNumber:
    def test_identity(self):
        assert exact_condition_number(SymMatrix.identity(4)) == 1.0

    def test_diag_2_1(self):
        assert exact_condition_number(SymMatrix.diagonal([2.0, 1.0])) == 2.0

    def test_diag_4_1_1(self):
        assert exact_condition_number(SymMatrix.diagonal([4.0, 1.0, 1.0])) == 4.0

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            exact_condition_number(SymMatrix.diagonal([1.0, -1.0]))


class TestLogdetSpd:
    def test_identity(self):
        assert logdet_spd(SymMatrix.identity(6)) == 0.0

    def test_diag(self):
        assert abs(logdet_spd(SymMatrix.diagonal([2.0, 1.0])) - np.log(2.0)) < 1e-15

    def test_matches_cofactor_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            A = random_spd(rng, 6)
            ref = np.log(cofactor_det(A))
            assert abs(logdet_spd(SymMatrix(A)) - ref) <= 1e-9 * max(1.0, abs(ref))

    def test_not_pd_raises(self):
        with pytest.raises(NotPositiveDefinite):
            logdet_spd(SymMatrix.diagonal([1.0, -1.0]))


class TestSparsityReport:
    def test_prefix_counts_against_brute_force(self):
        # symmetric matrix whose first row is (4, 2, 1, 1)
        a = np.array(
            [
                [4.0, 2.0, 1.0, 1.0],
                [2.0, 0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
            ]
        )
        rep = sparsity_report(SymMatrix(a), tol=0.0)
        assert brute_prefix_count(a[0], 50) == 1
        assert brute_prefix_count(a[0], 75) == 2
        assert rep.p_sparsity[50][0] == 1  # prefix 4 >= 0.5 * 8
        assert rep.p_sparsity[75][0] == 2  # 4 + 2 >= 0.75 * 8

    def test_symmetric_matrix_rows_match_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = int(rng.integers(2, 12))
            A = random_spd(rng, n)
            rep = sparsity_report(SymMatrix(A))
            for p in (50, 75, 90, 95):
                expected = [brute_prefix_count(A[i], p) for i in range(n)]
                assert list(rep.p_sparsity[p]) == expected

    def test_identity_density_and_p95(self):
        rep = sparsity_report(SymMatrix.identity(4), tol=0.0)
        assert rep.density == 0.25
        assert list(rep.p_sparsity[95]) == [1, 1, 1, 1]

    def test_zero_matrix_rows(self):
        rep = sparsity_report(SymMatrix(np.zeros((3, 3))), tol=0.0)
        assert rep.density == 0.0
        assert list(rep.p_sparsity[90]) == [0, 0, 0]

    def test_negative_tol_rejected(self):
        with pytest.raises(ValueError):
            sparsity_report(SymMatrix.identity(2), tol=-1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=2, max_value=10), st.integers(min_value=0, max_value=2**32 - 1))
    def test_p_counts_monotone_in_p(self, n, seed):
        A = random_spd(np.random.default_rng(seed), n)
        rep = sparsity_report(SymMatrix(A))
        counts = np.stack([rep.p_sparsity[p] for p in (50, 75, 90, 95)])
        assert (np.diff(counts, axis=0) >= 0).all()
