# pylint: disable=invalid-name
"""
This file contains tests for GCF derivative tensors, cumulants and derivative stacks.
"""

import itertools
import unittest

import numpy as np
import tensorly as tl
from tensorkit.gcf import cumulant
from tensorkit.gcf import derivative_stack
from tensorkit.gcf import gcf_derivative
from tensorkit.gcf import integer_partitions
from tensorkit.gcf import sample_gcf
from tensorkit.gcf import set_partition_count
from tensorkit.gcf import symmetrize


def _centered(X):
    return X - X.mean(axis=1, keepdims=True)


class TestPartitions(unittest.TestCase):

    def test_bell_numbers(self):
        """
        Test that the set partition counts over all integer partitions sum to the
        Bell numbers.
        """
        bell = {2: 2, 3: 5, 4: 15, 5: 52, 6: 203, 7: 877}
        for N, expected in bell.items():
            self.assertEqual(sum(set_partition_count(p) for p in integer_partitions(N)), expected)

    def test_symmetrize_is_projection(self):
        """
        Test that symmetrizing gives a permutation-invariant tensor and is idempotent.
        """
        A = np.random.default_rng(0).standard_normal((3, 3, 3))
        S = symmetrize(A)
        for perm in itertools.permutations(range(3)):
            np.testing.assert_allclose(S, S.transpose(perm), atol=1e-14)
        np.testing.assert_allclose(symmetrize(S), S, atol=1e-14)


class TestGcfDerivative(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(1)
        self.X = 0.5 * rng.standard_normal((2, 500))
        self.u = np.array([0.1, -0.05])

    def test_covariance_at_origin(self):
        """
        Test that the second derivative at u = 0 of centred data is the sample covariance.
        """
        X = _centered(self.X)
        psi = gcf_derivative(X, np.zeros(2), 2).value
        np.testing.assert_allclose(psi, X @ X.T / X.shape[1], atol=1e-12)

    def test_single_sample_vanishes(self):
        """
        Test that the second derivative of a one-sample GCF is zero.
        """
        X = np.array([[0.3], [-1.2]])
        np.testing.assert_allclose(gcf_derivative(X, np.array([0.4, 0.1]), 2).value, 0.0, atol=1e-12)

    def test_hessian_matches_finite_differences(self):
        """
        Test the second derivative against central differences of log phi.
        """
        def log_phi(u):
            return np.log(sample_gcf(self.X, u)[0])

        h = 1e-4
        H = np.zeros((2, 2))
        E = np.eye(2)
        for i in range(2):
            for j in range(2):
                H[i, j] = (
                    log_phi(self.u + h * E[i] + h * E[j])
                    - log_phi(self.u + h * E[i] - h * E[j])
                    - log_phi(self.u - h * E[i] + h * E[j])
                    + log_phi(self.u - h * E[i] - h * E[j])
                ) / (4 * h * h)
        np.testing.assert_allclose(gcf_derivative(self.X, self.u, 2).value, H, atol=1e-5)

    def test_fourth_order_matches_finite_differences(self):
        """
        Test the fourth derivative against second differences of the second derivative.
        """
        def psi2(u):
            return gcf_derivative(self.X, u, 2).value

        h = 1e-3
        E = np.eye(2)
        fd = np.zeros((2, 2, 2, 2))
        for k in range(2):
            for l in range(2):
                fd[:, :, k, l] = (
                    psi2(self.u + h * E[k] + h * E[l])
                    - psi2(self.u + h * E[k] - h * E[l])
                    - psi2(self.u - h * E[k] + h * E[l])
                    + psi2(self.u - h * E[k] - h * E[l])
                ) / (4 * h * h)
        np.testing.assert_allclose(gcf_derivative(self.X, self.u, 4).value, fd, atol=1e-4)

    def test_symmetry(self):
        """
        Test that a fifth-order derivative tensor is invariant under mode permutations.
        """
        rng = np.random.default_rng(2)
        X = rng.standard_normal((3, 200))
        value = gcf_derivative(X, 0.1 * rng.standard_normal(3), 5).value
        for _ in range(5):
            perm = rng.permutation(5)
            self.assertLessEqual(float(np.max(np.abs(value - value.transpose(perm)))), 1e-10)

    def test_mixing_structure(self):
        """
        Test that derivatives of mixed data equal the source derivatives at H^T u
        multiplied by H in every mode.
        """
        rng = np.random.default_rng(3)
        S = rng.uniform(-1.0, 1.0, (2, 300))
        H = rng.standard_normal((3, 2))
        u = 0.2 * rng.standard_normal(3)
        psi_x = gcf_derivative(H @ S, u, 3).value
        psi_s = gcf_derivative(S, H.T @ u, 3).value
        np.testing.assert_allclose(psi_x, tl.tenalg.multi_mode_dot(psi_s, [H] * 3), atol=1e-8)

    def test_order_range_and_overflow(self):
        """
        Test that unsupported orders and overflowing processing points are rejected.
        """
        with self.assertRaises(ValueError):
            gcf_derivative(self.X, self.u, 8)
        with self.assertRaises(ValueError):
            gcf_derivative(self.X, self.u, 1)
        with self.assertRaises(ValueError):
            gcf_derivative(self.X, np.array([1e4, 0.0]), 2)


class TestCumulant(unittest.TestCase):

    def test_second_order_is_covariance(self):
        """
        Test that the second cumulant of centred data is the covariance.
        """
        X = _centered(np.random.default_rng(4).standard_normal((3, 400)))
        np.testing.assert_allclose(cumulant(X, 2), X @ X.T / 400, atol=1e-12)

    def test_odd_cumulant_of_symmetric_sources(self):
        """
        Test that the third cumulant of sign-symmetric binary data is zero.
        """
        S = np.sign(np.random.default_rng(5).standard_normal((2, 100)))
        X = np.hstack([S, -S])
        np.testing.assert_allclose(cumulant(X, 3), 0.0, atol=1e-12)

    def test_gaussian_fourth_cumulant_is_small(self):
        """
        Test that the fourth cumulant of a large Gaussian sample is close to zero.
        """
        X = _centered(np.random.default_rng(6).standard_normal((2, 1_000_000)))
        self.assertLess(float(np.max(np.abs(cumulant(X, 4)))), 0.05)

    def test_cumulant_matches_derivative_at_origin(self):
        """
        Test that the cumulant equals the GCF derivative at u = 0 for centred data.
        """
        X = _centered(np.random.default_rng(7).standard_normal((2, 300)))
        np.testing.assert_allclose(cumulant(X, 4), gcf_derivative(X, np.zeros(2), 4).value, atol=1e-10)


class TestDerivativeStack(unittest.TestCase):

    def test_single_point(self):
        """
        Test that a one-point stack holds the single derivative tensor.
        """
        X = np.random.default_rng(8).standard_normal((2, 100))
        u = np.array([0.1, 0.2])
        stack = derivative_stack(X, [u], 3)
        self.assertEqual(stack.shape, (2, 2, 2, 1))
        np.testing.assert_allclose(stack[..., 0], gcf_derivative(X, u, 3).value)

    def test_mean_subtraction_of_identical_points(self):
        """
        Test that mean subtraction over identical points gives a zero stack.
        """
        X = np.random.default_rng(9).standard_normal((2, 100))
        u = np.array([0.1, 0.2])
        np.testing.assert_allclose(derivative_stack(X, [u, u, u], 3, subtract_mean=True), 0.0, atol=1e-14)

    def test_empty_points(self):
        """
        Test that an empty list of processing points raises an error.
        """
        with self.assertRaises(ValueError):
            derivative_stack(np.ones((2, 3)), [], 3)


if __name__ == "__main__":
    unittest.main()
