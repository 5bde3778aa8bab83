# pylint: disable=invalid-name
"""
This file contains tests for folding, Toeplitz/Hankel tensorization, the QTT
convolution tensor and the closed-form sinusoid trains.
"""

import unittest

import numpy as np
import tensorly as tl
from tensorkit.tensorize import HankelSpec
from tensorkit.tensorize import SinusoidTT
from tensorkit.tensorize import ToeplitzSpec
from tensorkit.tensorize import convolution_tensor_qtt
from tensorkit.tensorize import dequantize
from tensorkit.tensorize import elementary_core_tensor
from tensorkit.tensorize import fold
from tensorkit.tensorize import folded_sinusoid_tt
from tensorkit.tensorize import hankel_generator
from tensorkit.tensorize import hankel_tensor
from tensorkit.tensorize import loewner_matrix
from tensorkit.tensorize import phase_matrix
from tensorkit.tensorize import qtt_levels_to_dense
from tensorkit.tensorize import quantize
from tensorkit.tensorize import sinusoid_matrix_factors
from tensorkit.tensorize import sinusoid_samples
from tensorkit.tensorize import sinusoid_tt
from tensorkit.tensorize import sinusoid_tucker3
from tensorkit.tensorize import toeplitz_from_qtt
from tensorkit.tensorize import toeplitz_tensor
from tensorkit.tensorize import toeplitz_tensor_recursive
from tensorkit.tensorize import unfold
from tensorkit.tensorize import vandermonde_hankel
from tensorkit.tt_core import contract_full
from tensorkit.tt_core import hadamard
from tensorkit.tt_core import tt_round
from tensorkit.tt_core import tt_svd


def _multilinear_ranks(x, tol=1e-8):
    ranks = []
    for n in range(x.ndim):
        s = np.linalg.svd(tl.unfold(x, n), compute_uv=False)
        ranks.append(int(np.sum(s > tol * s[0])))
    return ranks


def _contract_leading(T, vectors):
    res = T
    for v in vectors:
        res = np.tensordot(v, res, axes=(0, 0))
    return res


def _full_convolution(vectors, y):
    res = np.asarray(y, dtype=float)
    for v in vectors:
        res = np.convolve(res, v)
    return res


class TestFolding(unittest.TestCase):

    def test_column_major_fold(self):
        """
        Test that folding uses the first-mode-fastest index rule.
        """
        np.testing.assert_array_equal(fold(np.arange(1, 7), (2, 3)), [[1, 3, 5], [2, 4, 6]])

    def test_unfold_inverts_fold(self):
        """
        Test that unfolding a folded random vector gives the vector back.
        """
        v = np.random.default_rng(0).standard_normal(60)
        np.testing.assert_array_equal(unfold(fold(v, (3, 4, 5))), v)

    def test_fold_size_mismatch(self):
        """
        Test that folding into sizes with the wrong product raises an error.
        """
        with self.assertRaises(ValueError):
            fold(np.arange(5), (2, 3))

    def test_quantize_least_significant_first(self):
        """
        Test that the first quantized mode is the least significant bit.
        """
        q = quantize(np.arange(8))
        self.assertEqual(q.shape, (2, 2, 2))
        self.assertEqual(q[1, 0, 0], 1)
        self.assertEqual(q[0, 0, 1], 4)
        np.testing.assert_array_equal(dequantize(q), np.arange(8))
        with self.assertRaises(ValueError):
            quantize(np.arange(6))

    def test_exponential_has_rank_one(self):
        """
        Test that a quantized exponential is a rank-1 train.
        """
        v = 2.0 * 0.97 ** np.arange(256)
        self.assertEqual(tt_svd(quantize(v), 1e-10).ranks, [1] * 9)


class TestToeplitzHankel(unittest.TestCase):

    def test_toeplitz_worked_example(self):
        """
        Test the horizontal slices of the 3 x 3 x 3 Toeplitz tensor of 1..7.
        """
        T = toeplitz_tensor(np.arange(1, 8), (3, 3, 3))
        np.testing.assert_array_equal(T[0], [[5, 6, 7], [4, 5, 6], [3, 4, 5]])
        np.testing.assert_array_equal(T[1], [[4, 5, 6], [3, 4, 5], [2, 3, 4]])
        np.testing.assert_array_equal(T[2], [[3, 4, 5], [2, 3, 4], [1, 2, 3]])

    def test_hankel_worked_example(self):
        """
        Test the slices of the 3 x 3 x 3 Hankel tensor of 1..7 and its symmetry.
        """
        H = hankel_tensor(np.arange(1, 8), (3, 3, 3))
        np.testing.assert_array_equal(H[0], [[1, 2, 3], [2, 3, 4], [3, 4, 5]])
        np.testing.assert_array_equal(H[1], [[2, 3, 4], [3, 4, 5], [4, 5, 6]])
        np.testing.assert_array_equal(H[2], [[3, 4, 5], [4, 5, 6], [5, 6, 7]])
        np.testing.assert_array_equal(H, H.transpose(1, 0, 2))
        np.testing.assert_array_equal(H, H.transpose(2, 1, 0))
        self.assertTrue(HankelSpec(np.arange(1, 8), (3, 3, 3)).is_symmetric)

    def test_toeplitz_matrix_pattern(self):
        """
        Test that the second-order case is the classic Toeplitz matrix: the first
        column runs backwards through y and the first row forwards.
        """
        y = np.arange(1, 6)
        T = toeplitz_tensor(y, (3, 3))
        np.testing.assert_array_equal(T[:, 0], [3, 2, 1])
        np.testing.assert_array_equal(T[0], [3, 4, 5])
        self.assertTrue(np.all(np.diff(np.diagonal(T)) == 0))

    def test_generator_length_checked(self):
        """
        Test that a generator of the wrong length raises an error.
        """
        with self.assertRaises(ValueError):
            toeplitz_tensor(np.arange(6), (3, 3, 3))
        with self.assertRaises(ValueError):
            ToeplitzSpec(np.arange(6), (3, 3, 3))

    def test_toeplitz_convolution_identity(self):
        """
        Test that contracting all but the last Toeplitz mode with vectors yields the
        valid segment of the direct convolution.
        """
        rng = np.random.default_rng(1)
        for sizes in [(4,), (3, 5), (2, 4, 3)]:
            xs = [rng.standard_normal(I) for I in sizes]
            L = 13
            y = rng.standard_normal(L)
            J = sum(I - 1 for I in sizes)
            T = toeplitz_tensor(y, list(sizes) + [L - J])
            expected = _full_convolution(xs, y)[J:L]
            np.testing.assert_allclose(_contract_leading(T, xs), expected, atol=1e-10)

    def test_hankel_convolution_identity(self):
        """
        Test that the Hankel tensor contracted with reversed vectors yields the same
        convolution segment.
        """
        rng = np.random.default_rng(2)
        sizes = (3, 4)
        xs = [rng.standard_normal(I) for I in sizes]
        L = 11
        y = rng.standard_normal(L)
        J = sum(I - 1 for I in sizes)
        H = hankel_tensor(y, list(sizes) + [L - J])
        expected = _full_convolution(xs, y)[J:L]
        np.testing.assert_allclose(_contract_leading(H, [x[::-1] for x in xs]), expected, atol=1e-10)

    def test_recursive_generation(self):
        """
        Test that the recursive Toeplitz construction equals the direct one.
        """
        y = np.random.default_rng(3).standard_normal(3 + 4 + 2 + 5 - 3)
        np.testing.assert_array_equal(
            toeplitz_tensor_recursive(y, (3, 4, 2, 5)), toeplitz_tensor(y, (3, 4, 2, 5))
        )

    def test_hankel_generator_recovery(self):
        """
        Test that the generator is recovered by concatenating edge fibres.
        """
        y = np.random.default_rng(4).standard_normal(4 + 3 + 5 - 2)
        np.testing.assert_array_equal(hankel_generator(hankel_tensor(y, (4, 3, 5))), y)

    def test_hadamard_property(self):
        """
        Test that Hankel and Toeplitz tensors turn element-wise products of
        generators into element-wise products of tensors, also in TT format.
        """
        rng = np.random.default_rng(5)
        u = rng.standard_normal(15)
        v = rng.standard_normal(15)
        sizes = (5, 5, 7)
        for build in (hankel_tensor, toeplitz_tensor):
            prod = hadamard(tt_svd(build(u, sizes)), tt_svd(build(v, sizes)))
            np.testing.assert_allclose(contract_full(prod), build(u * v, sizes), atol=1e-10)

    def test_vandermonde_hankel(self):
        """
        Test that the Vandermonde CP model equals the Hankel tensor of the exponential sum.
        """
        nodes = np.array([0.9, -0.5, 1.1])
        weights = np.array([1.0, 2.0, -0.5])
        sizes = (3, 4, 2)
        t = np.arange(sum(sizes) - len(sizes) + 1)
        y = (weights[None, :] * nodes[None, :] ** t[:, None]).sum(axis=1)
        np.testing.assert_allclose(vandermonde_hankel(nodes, weights, sizes), hankel_tensor(y, sizes), atol=1e-12)

    def test_hankel_rank_facts(self):
        """
        Test the multilinear ranks of third-order Hankel tensors of sin(wt), t and
        t sin(wt).
        """
        t = np.arange(13, dtype=float)
        sizes = (5, 5, 5)
        self.assertEqual(_multilinear_ranks(hankel_tensor(np.sin(0.4 * t), sizes)), [2, 2, 2])
        self.assertEqual(_multilinear_ranks(hankel_tensor(t, sizes)), [2, 2, 2])
        self.assertLessEqual(max(_multilinear_ranks(hankel_tensor(t * np.sin(0.4 * t), sizes))), 4)


class TestLoewner(unittest.TestCase):

    def test_worked_example(self):
        """
        Test the Loewner matrix of 1/t over two point sets.
        """
        x = np.array([3.0, 4.0, 5.0, 6.0])
        y = np.array([8.0, 9.0, 10.0])
        L = loewner_matrix(1 / x, 1 / y, x, y)
        np.testing.assert_allclose(L, -np.outer(1 / x, 1 / y), atol=1e-15)

    def test_constant_function(self):
        """
        Test that a constant function gives the zero matrix.
        """
        x = np.array([1.0, 2.0])
        y = np.array([3.0, 4.0, 5.0])
        np.testing.assert_array_equal(loewner_matrix(np.ones(2), np.ones(3), x, y), np.zeros((2, 3)))

    def test_rational_rank(self):
        """
        Test that a degree-(1, 1) rational function gives a numerically low-rank matrix.
        """
        x = np.linspace(1.0, 2.0, 8)
        y = np.linspace(3.0, 4.0, 7)

        def f(t):
            return (2.0 * t + 1.0) / (t + 0.5 + 1.0)

        s = np.linalg.svd(loewner_matrix(f(x), f(y), x, y), compute_uv=False)
        self.assertLessEqual(int(np.sum(s > 1e-10 * s[0])), 2)

    def test_coincident_points(self):
        """
        Test that a shared point between the two sets raises an error.
        """
        with self.assertRaises(ValueError):
            loewner_matrix(np.ones(2), np.ones(2), np.array([1.0, 2.0]), np.array([2.0, 3.0]))


class TestConvolutionQTT(unittest.TestCase):

    def test_elementary_blocks_order_two(self):
        """
        Test the four blocks of the order-2 elementary core and their layout.
        """
        S = elementary_core_tensor(2)
        S1 = np.eye(2)
        S2 = np.array([[0.0, 1.0], [0.0, 0.0]])
        S4 = np.array([[0.0, 0.0], [1.0, 0.0]])
        np.testing.assert_array_equal(S[0, :, :, 0, 0], S1)
        np.testing.assert_array_equal(S[0, :, :, 1, 0], S2)
        np.testing.assert_array_equal(S[0, :, :, 0, 1], np.zeros((2, 2)))
        np.testing.assert_array_equal(S[0, :, :, 1, 1], S4)
        np.testing.assert_array_equal(S[1, :, :, 0, 0], S2)
        np.testing.assert_array_equal(S[1, :, :, 1, 1], S1)

    def test_order_range(self):
        """
        Test that orders outside 2..17 are rejected.
        """
        with self.assertRaises(ValueError):
            convolution_tensor_qtt(1, 3)
        with self.assertRaises(ValueError):
            convolution_tensor_qtt(18, 3)

    def test_last_core_is_backward_identity(self):
        """
        Test that the last core is the exchange matrix.
        """
        c = convolution_tensor_qtt(3, 4)
        np.testing.assert_array_equal(c.exchange, np.fliplr(np.eye(3)))

    def test_rank_table(self):
        """
        Test that the rounded convolution trains have the tabulated ranks for depth 6.
        """
        D = 6
        leading = {2: [2, 2], 3: [2, 3], 4: [3, 4], 5: [3, 4], 6: [4, 5]}
        for N, head in leading.items():
            x = tt_round(convolution_tensor_qtt(N, D).to_train(), 1e-10)
            expected = head + [N] * (D - len(head))
            self.assertEqual(x.ranks[1:-1], expected, msg=f"N={N}")

    def test_toeplitz_from_qtt(self):
        """
        Test that contracting the QTT convolution tensor with a quantized generator
        of length N 2^D gives the Toeplitz tensor of the generator tail y[N-1:].
        """
        rng = np.random.default_rng(6)
        for N, D in [(2, 1), (2, 3), (3, 2)]:
            y = rng.standard_normal(N * 2**D)
            y_tt = tt_svd(fold(y, [2] * D + [N]))
            T = toeplitz_from_qtt(convolution_tensor_qtt(N, D), y_tt)
            expected = toeplitz_tensor(y[N - 1 :], (2**D,) * N)
            np.testing.assert_allclose(qtt_levels_to_dense(T, N), expected, atol=1e-10)

    def test_generator_sizes_checked(self):
        """
        Test that a generator train with the wrong mode sizes is rejected.
        """
        y_tt = tt_svd(np.ones((2, 2, 2)))
        with self.assertRaises(ValueError):
            toeplitz_from_qtt(convolution_tensor_qtt(2, 3), y_tt)


class TestSinusoids(unittest.TestCase):

    def test_closed_form_trains(self):
        """
        Test that every closed-form sinusoid train reproduces the directly
        generated tensor and has all ranks 2.
        """
        rng = np.random.default_rng(7)
        for _ in range(10):
            omega = rng.uniform(0.05, 3.0)
            phi = rng.uniform(0.0, 2 * np.pi)
            for kind in ("folded", "toeplitz", "hankel"):
                sinusoid = SinusoidTT(kind, omega, phi, 10)
                x = sinusoid.to_train()
                np.testing.assert_allclose(contract_full(x), sinusoid.to_dense(), atol=1e-10)
                self.assertEqual(tt_round(x, 1e-8).ranks[1:-1], [2] * 9)

    def test_folded_example(self):
        """
        Test the folded train of sin(0.7 t + 0.2) for D = 6 against sampling.
        """
        x = sinusoid_tt("folded", 0.7, 0.2, 6)
        np.testing.assert_allclose(
            contract_full(x), fold(sinusoid_samples(0.7, 0.2, 64), (2,) * 6), atol=1e-12
        )

    def test_toeplitz_example(self):
        """
        Test the quantized Toeplitz train for D = 5 against the dense Toeplitz tensor.
        """
        y = sinusoid_samples(0.9, 1.3, 6)
        np.testing.assert_allclose(
            contract_full(sinusoid_tt("toeplitz", 0.9, 1.3, 5)), toeplitz_tensor(y, (2,) * 5), atol=1e-12
        )

    def test_phase_matrix_at_right_angle(self):
        """
        Test that the phase matrix at pi/2 is diag(1, -1).
        """
        np.testing.assert_allclose(phase_matrix(np.pi / 2), [[1.0, 0.0], [0.0, -1.0]], atol=1e-15)

    def test_degenerate_frequency(self):
        """
        Test that a frequency with sin(w) = 0 is rejected.
        """
        with self.assertRaises(ValueError):
            SinusoidTT("hankel", 0.0, 0.3, 4)
        with self.assertRaises(ValueError):
            SinusoidTT("unknown", 0.5, 0.3, 4)

    def test_two_and_three_way_factorisations(self):
        """
        Test the matrix factorisation U S V^T and the Tucker form of folded sinusoids.
        """
        omega, phi = 0.37, 0.8
        U, S, V = sinusoid_matrix_factors(omega, phi, 6, 5)
        np.testing.assert_allclose(U @ S @ V.T, fold(sinusoid_samples(omega, phi, 30), (6, 5)), atol=1e-12)
        core, factors = sinusoid_tucker3(omega, phi, 3, 4, 5)
        np.testing.assert_allclose(
            tl.tucker_to_tensor((core, factors)),
            fold(sinusoid_samples(omega, phi, 60), (3, 4, 5)),
            atol=1e-12,
        )

    def test_folded_arbitrary_sizes(self):
        """
        Test the rank-2 folded train for non-binary mode sizes.
        """
        x = folded_sinusoid_tt(0.21, 0.4, (3, 5, 4))
        self.assertEqual(x.ranks, [1, 2, 2, 1])
        np.testing.assert_allclose(
            contract_full(x), fold(sinusoid_samples(0.21, 0.4, 60), (3, 5, 4)), atol=1e-12
        )


if __name__ == "__main__":
    unittest.main()
