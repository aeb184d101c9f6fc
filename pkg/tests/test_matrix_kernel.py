"""Tests for the dense symmetric linear-algebra kernel.

Every eigen routine is cross-checked against numpy's LAPACK wrappers, which
play the role of an independent reference implementation here.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pidcert import matrix_kernel as mk
from pidcert.errors import DimensionError, UsageError


def random_symmetric(rng, n, scale=5.0):
    a = rng.uniform(-scale, scale, size=(n, n))
    return mk.symmetrize(a)


class TestSymmetrize:
    def test_upper_triangular(self):
        out = mk.symmetrize([[0.0, 2.0], [0.0, 0.0]])
        np.testing.assert_array_equal(out, [[0.0, 1.0], [1.0, 0.0]])

    def test_identity_fixed_point(self):
        np.testing.assert_array_equal(mk.symmetrize(np.eye(3)), np.eye(3))

    def test_hand_arithmetic(self):
        out = mk.symmetrize([[1.0, 4.0], [2.0, 3.0]])
        np.testing.assert_array_equal(out, [[1.0, 3.0], [3.0, 3.0]])

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            mk.symmetrize(np.ones((2, 3)))

    def test_rejects_nan(self):
        with pytest.raises(UsageError):
            mk.symmetrize([[np.nan, 0.0], [0.0, 0.0]])

    @given(st.integers(0, 10**6), st.integers(1, 6))
    @settings(max_examples=50, deadline=None)
    def test_idempotent_bitwise(self, seed, n):
        rng = np.random.default_rng(seed)
        m = rng.uniform(-10, 10, size=(n, n))
        once = mk.symmetrize(m)
        twice = mk.symmetrize(once)
        assert np.array_equal(once, twice)


class TestEigExtrema:
    def test_identity(self):
        assert mk.eig_extrema(np.eye(4)) == (1.0, 1.0)

    def test_diagonal(self):
        lo, hi = mk.eig_extrema(np.diag([3.0, -2.0, 5.0]))
        assert lo == -2.0 and hi == 5.0

    def test_2x2_quadratic_formula(self):
        # characteristic polynomial x^2 - 12x + 19 has roots 6 +- sqrt(17)
        lo, hi = mk.eig_extrema(np.array([[2.0, -1.0], [-1.0, 10.0]]))
        assert abs(lo - (6 - math.sqrt(17))) < 1e-12
        assert abs(hi - (6 + math.sqrt(17))) < 1e-12

    def test_rejects_asymmetric(self):
        with pytest.raises(UsageError):
            mk.eig_extrema([[1.0, 2.0], [0.0, 1.0]])

    @given(st.integers(0, 10**6), st.integers(1, 8))
    @settings(max_examples=60, deadline=None)
    def test_matches_lapack(self, seed, n):
        rng = np.random.default_rng(seed)
        s = random_symmetric(rng, n)
        lo, hi = mk.eig_extrema(s)
        ref = np.linalg.eigvalsh(s)
        tol = 1e-10 * (1 + np.linalg.norm(s))
        assert abs(lo - ref[0]) < tol
        assert abs(hi - ref[-1]) < tol

    @given(st.integers(0, 10**6), st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_rayleigh_sandwich(self, seed, n):
        """lambda_min*I <= S <= lambda_max*I on 100 random unit vectors."""
        rng = np.random.default_rng(seed)
        s = random_symmetric(rng, n)
        lo, hi = mk.eig_extrema(s)
        for _ in range(100):
            x = rng.standard_normal(n)
            x /= np.linalg.norm(x)
            q = float(x @ s @ x)
            assert q - lo >= -1e-9
            assert hi - q >= -1e-9


class TestOperatorNorm:
    def test_identity(self):
        assert abs(mk.operator_norm(np.eye(5)) - 1.0) < 1e-12

    def test_nilpotent(self):
        # m^T m = diag(0, 4)
        assert abs(mk.operator_norm([[0.0, 2.0], [0.0, 0.0]]) - 2.0) < 1e-12

    def test_diagonal_absolute_max(self):
        assert abs(mk.operator_norm(np.diag([-3.0, 1.0])) - 3.0) < 1e-12

    @given(st.integers(0, 10**6), st.integers(1, 6))
    @settings(max_examples=50, deadline=None)
    def test_matches_svd(self, seed, n):
        rng = np.random.default_rng(seed)
        m = rng.uniform(-5, 5, size=(n, n))
        ref = np.linalg.svd(m, compute_uv=False)[0]
        assert abs(mk.operator_norm(m) - ref) < 1e-10 * (1 + np.linalg.norm(m))


class TestSchurPositive:
    def test_block_identity(self):
        assert mk.schur_positive(np.eye(2), np.zeros((2, 2)), np.eye(2))

    def test_scalar_complement_negative(self):
        assert not mk.schur_positive([[1.0]], [[2.0]], [[1.0]])

    def test_scalar_complement_positive(self):
        assert mk.schur_positive(2 * np.eye(1), [[1.0]], np.eye(1))

    def test_singular_d_returns_false(self):
        assert not mk.schur_positive(np.diag([1.0, 0.0]), np.zeros((2, 2)), np.eye(2))
        assert not mk.schur_positive(-np.eye(2), np.zeros((2, 2)), np.eye(2))

    def test_agrees_with_assembled_eigenvalue(self):
        """1000 random blocks, dims 1-4: Schur route matches the direct
        lambda_min of the assembled matrix away from the decision boundary."""
        rng = np.random.default_rng(7)
        disagreements = 0
        checked = 0
        for _ in range(1000):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(1, 5))
            d = random_symmetric(rng, m, scale=2.0) + np.eye(m) * rng.uniform(-1, 3)
            e = random_symmetric(rng, n, scale=2.0) + np.eye(n) * rng.uniform(-1, 3)
            b = rng.uniform(-2, 2, size=(m, n))
            assembled = mk.assemble_block_2x2(d, b, e)
            lam_min, _ = mk.eig_extrema(mk.symmetrize(assembled))
            if abs(lam_min) <= 1e-9 * (1 + np.linalg.norm(assembled)):
                continue  # inside the tolerance band either verdict is fine
            checked += 1
            if mk.schur_positive(d, b, e) != (lam_min > 0):
                disagreements += 1
        assert checked > 900
        assert disagreements == 0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            mk.schur_positive(np.eye(2), np.ones((3, 2)), np.eye(2))


class TestEigenGapSufficient:
    def test_wide_gap(self):
        assert mk.eigen_gap_sufficient(4 * np.eye(2), np.eye(2), 4 * np.eye(2))

    def test_boundary_fails_strictly(self):
        assert not mk.eigen_gap_sufficient(np.eye(1), [[1.0]], np.eye(1))

    def test_zero_coupling(self):
        assert mk.eigen_gap_sufficient(np.eye(2), np.zeros((2, 2)), np.eye(2))

    def test_implies_schur_positive(self):
        rng = np.random.default_rng(11)
        hits = 0
        for _ in range(500):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(1, 5))
            d = random_symmetric(rng, m, 1.0) + 2.0 * np.eye(m)
            e = random_symmetric(rng, n, 1.0) + 2.0 * np.eye(n)
            b = rng.uniform(-2, 2, size=(m, n))
            if mk.eigen_gap_sufficient(d, b, e):
                hits += 1
                assert mk.schur_positive(d, b, e)
        assert hits > 50  # the property must actually get exercised


class TestKronecker:
    def test_identity_factors(self):
        np.testing.assert_array_equal(mk.kronecker(np.eye(2), np.eye(3)), np.eye(6))

    def test_scalar_scaling(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(mk.kronecker([[2.0]], m), 2 * m)

    def test_identity_second_factor(self):
        m = np.array([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_array_equal(mk.kronecker(m, np.eye(1)), m)

    @given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_psd_factors_give_psd(self, seed, na, nb):
        rng = np.random.default_rng(seed)
        ga = rng.standard_normal((na, na))
        gb = rng.standard_normal((nb, nb))
        a = mk.symmetrize(ga @ ga.T)
        b = mk.symmetrize(gb @ gb.T)
        lam_min, _ = mk.eig_extrema(mk.symmetrize(mk.kronecker(a, b)))
        assert lam_min >= -1e-10
