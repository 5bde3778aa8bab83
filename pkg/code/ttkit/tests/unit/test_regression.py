# pylint: disable=invalid-name
"""
This file contains tests for the tensor regression models and kernels.
"""

import json
import unittest

import numpy as np
import tensorly as tl
from tensorkit.regression import KernelConfig
from tensorkit.regression import holrr_fit
from tensorkit.regression import holrr_predict
from tensorkit.regression import hopls_fit
from tensorkit.regression import hopls_predict
from tensorkit.regression import kernel_matrix
from tensorkit.regression import kholrr_fit
from tensorkit.regression import kholrr_predict
from tensorkit.regression import lsstm_fit
from tensorkit.regression import lsstm_predict
from tensorkit.regression import model_from_dict
from tensorkit.regression import mtr_fit
from tensorkit.regression import mtr_predict
from tensorkit.regression import npls_fit


class TestMtr(unittest.TestCase):

    def test_planted_model(self):
        """
        Test that ALS fits data generated by exact mode-wise weight matrices.
        """
        rng = np.random.default_rng(0)
        X = rng.standard_normal((3, 4, 50))
        W1 = rng.standard_normal((2, 3))
        W2 = rng.standard_normal((5, 4))
        Y = tl.tenalg.multi_mode_dot(X, [W1, W2], modes=[0, 1])
        model = mtr_fit(X, Y)
        pred = mtr_predict(model, X)
        self.assertLess(np.linalg.norm(pred - Y) / np.linalg.norm(Y), 1e-6)
        np.testing.assert_allclose(mtr_predict(model, X[..., 0]), pred[..., 0])

    def test_single_mode_is_least_squares(self):
        """
        Test that with one mode the fitted weight matrix is the dense least-squares solution.
        """
        rng = np.random.default_rng(5)
        X = rng.standard_normal((4, 30))
        Y = rng.standard_normal((3, 30))
        model = mtr_fit(X, Y)
        expected = np.linalg.lstsq(X.T, Y.T, rcond=None)[0].T
        np.testing.assert_allclose(model.weights[0], expected, atol=1e-10)

    def test_shape_checks(self):
        """
        Test that mismatched orders and sample counts are rejected.
        """
        with self.assertRaises(ValueError):
            mtr_fit(np.ones((2, 3, 4)), np.ones((2, 4)))
        with self.assertRaises(ValueError):
            mtr_fit(np.ones((2, 3, 4)), np.ones((2, 3, 5)))


class TestHolrr(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(1)
        self.X = rng.standard_normal((20, 4))
        self.Y = rng.standard_normal((20, 3, 2))
        self.X_test = rng.standard_normal((5, 4))

    def test_full_rank_is_ridge(self):
        """
        Test that HOLRR at full ranks predicts like dense ridge regression.
        """
        gamma = 0.3
        model = holrr_fit(self.X, self.Y, [4, 3, 2], gamma)
        W = np.linalg.solve(self.X.T @ self.X + gamma * np.eye(4), self.X.T @ self.Y.reshape(20, -1))
        expected = (self.X_test @ W).reshape(5, 3, 2)
        np.testing.assert_allclose(holrr_predict(model, self.X_test), expected, atol=1e-8)
        np.testing.assert_allclose(holrr_predict(model, self.X_test[0]), expected[0], atol=1e-8)

    def test_linear_kernel_matches_holrr(self):
        """
        Test that KHOLRR with the linear kernel gives the HOLRR predictions at low rank.
        """
        gamma = 0.1
        ranks = [2, 2, 2]
        model = holrr_fit(self.X, self.Y, ranks, gamma)
        cfg = KernelConfig("linear")
        K = kernel_matrix(list(self.X), cfg)
        kmodel = kholrr_fit(K, self.Y, ranks, gamma, cfg, self.X)
        k_star = kernel_matrix(list(self.X_test), cfg, list(self.X))
        np.testing.assert_allclose(
            kholrr_predict(kmodel, k_star), holrr_predict(model, self.X_test), atol=1e-6
        )

    def test_rbf_kernel_beats_linear_on_nonlinear_map(self):
        """
        Test that KHOLRR with a Gaussian kernel halves the test error of linear HOLRR
        on a rank-2 nonlinear map.
        """
        rng = np.random.default_rng(6)
        P = rng.standard_normal((3, 2))
        Q = rng.standard_normal((3, 2))

        def target(X):
            return np.sin(2.0 * X[:, 0])[:, None, None] * P + np.cos(2.0 * X[:, 1])[:, None, None] * Q

        X = rng.uniform(-2.0, 2.0, (200, 2))
        X_test = rng.uniform(-2.0, 2.0, (50, 2))
        Y, Y_test = target(X), target(X_test)
        ranks = [2, 3, 2]
        linear = holrr_fit(X, Y, ranks, 1e-3)
        linear_rmse = np.sqrt(np.mean((holrr_predict(linear, X_test) - Y_test) ** 2))
        cfg = KernelConfig("gaussian_rbf", beta=0.5)
        kmodel = kholrr_fit(kernel_matrix(list(X), cfg), Y, ranks, 1e-3, cfg, X)
        k_star = kernel_matrix(list(X_test), cfg, list(X))
        kernel_rmse = np.sqrt(np.mean((kholrr_predict(kmodel, k_star) - Y_test) ** 2))
        self.assertLessEqual(2.0 * kernel_rmse, linear_rmse)

    def test_singular_without_ridge(self):
        """
        Test that fewer samples than features without a ridge term is rejected.
        """
        with self.assertRaises(ValueError):
            holrr_fit(self.X[:3], self.Y[:3], [2, 2, 2], 0.0)
        K = kernel_matrix(list(self.X), KernelConfig("linear"))
        with self.assertRaises(ValueError):
            kholrr_fit(K, self.Y, [2, 2, 2], 0.0)

    def test_invalid_ranks(self):
        """
        Test that ranks above the mode sizes are rejected.
        """
        with self.assertRaises(ValueError):
            holrr_fit(self.X, self.Y, [2, 4, 2], 0.1)
        with self.assertRaises(ValueError):
            holrr_fit(self.X, self.Y, [2, 2], 0.1)


class TestKernels(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(2)
        self.tensors = [rng.standard_normal((3, 4, 2)) for _ in range(4)]

    def test_linear_is_inner_product(self):
        """
        Test that the linear kernel is the Gram matrix of the vectorised tensors.
        """
        F = np.stack([t.reshape(-1) for t in self.tensors])
        np.testing.assert_allclose(kernel_matrix(self.tensors, KernelConfig("linear")), F @ F.T)

    def test_gaussian_rbf(self):
        """
        Test the Gaussian kernel values against their closed form.
        """
        K = kernel_matrix(self.tensors, KernelConfig("gaussian_rbf", beta=2.0))
        d2 = np.sum((self.tensors[0] - self.tensors[1]) ** 2)
        self.assertAlmostEqual(K[0, 1], np.exp(-d2 / 8.0), places=12)
        np.testing.assert_allclose(np.diag(K), 1.0)

    def test_chordal_invariances(self):
        """
        Test that the chordal kernel ignores scaling and is unchanged when both
        arguments are rotated in the same mode.
        """
        cfg = KernelConfig("chordal", beta=1.0)
        a, b = self.tensors[0], self.tensors[1]
        self.assertAlmostEqual(kernel_matrix([a], cfg, [3.0 * a])[0, 0], 1.0, places=10)
        Q = np.linalg.qr(np.random.default_rng(3).standard_normal((4, 4)))[0]
        ra = tl.tenalg.mode_dot(a, Q, 1)
        rb = tl.tenalg.mode_dot(b, Q, 1)
        self.assertAlmostEqual(
            kernel_matrix([ra], cfg, [rb])[0, 0], kernel_matrix([a], cfg, [b])[0, 0], places=10
        )

    def test_config_validation(self):
        """
        Test that unknown kernels and non-positive widths are rejected.
        """
        with self.assertRaises(ValueError):
            KernelConfig("polynomial")
        with self.assertRaises(ValueError):
            KernelConfig("gaussian_rbf", beta=0.0)
        with self.assertRaises(ValueError):
            kernel_matrix([], KernelConfig())


class TestHopls(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(4)
        t = rng.standard_normal((30, 2))
        self.X = tl.tenalg.multi_mode_dot(
            rng.standard_normal((2, 4, 3)), [t, rng.standard_normal((4, 4)), rng.standard_normal((3, 3))]
        ) + 0.05 * rng.standard_normal((30, 4, 3))
        self.Y = tl.tenalg.multi_mode_dot(
            rng.standard_normal((2, 2, 2)), [t, rng.standard_normal((2, 2)), rng.standard_normal((2, 2))]
        ) + 0.05 * rng.standard_normal((30, 2, 2))

    def test_rank_one_matches_npls(self):
        """
        Test that HOPLS with rank-1 loadings finds the N-way PLS latent vector.
        """
        hopls = hopls_fit(self.X, self.Y, 1, [1, 1], [1, 1])
        npls = npls_fit(self.X, self.Y, 1)
        self.assertGreater(abs(float(hopls.latents[0] @ npls.latents[0])), 0.999)

    def test_training_prediction_residual(self):
        """
        Test that predicting the training inputs leaves exactly the deflated output residual.
        """
        model = hopls_fit(self.X, self.Y, 3, [2, 2], [2, 2])
        pred = hopls_predict(model, self.X)
        self.assertAlmostEqual(float(np.linalg.norm(self.Y - pred)), model.y_norms[-1], places=8)
        np.testing.assert_allclose(hopls_predict(model, self.X[0]), pred[0], atol=1e-12)

    def test_residual_norms_decrease(self):
        """
        Test that every deflation step reduces both residual norms.
        """
        model = hopls_fit(self.X, self.Y, 4, [2, 2], [1, 1])
        self.assertTrue(np.all(np.diff(model.x_norms) <= 1e-10))
        self.assertTrue(np.all(np.diff(model.y_norms) <= 1e-10))
        self.assertEqual(model.components, 4)

    def test_invalid_arguments(self):
        """
        Test that bad loading ranks, component counts and sample counts are rejected.
        """
        with self.assertRaises(ValueError):
            hopls_fit(self.X, self.Y, 1, [5, 1], [1, 1])
        with self.assertRaises(ValueError):
            npls_fit(self.X, self.Y, -1)
        with self.assertRaises(ValueError):
            npls_fit(self.X, self.Y[:10], 1)


class TestLsStm(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal(3)
        b = rng.standard_normal(4)
        W = np.outer(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
        self.y = np.where(rng.random(40) < 0.5, -1.0, 1.0)
        self.X = self.y[:, None, None] * 2.0 * W + 0.3 * rng.standard_normal((40, 3, 4))

    def test_separable_data(self):
        """
        Test that a planted rank-1 separating direction is learned.
        """
        model = lsstm_fit(self.X, self.y, gamma=10.0)
        accuracy = float(np.mean(lsstm_predict(model, self.X) == self.y))
        self.assertGreaterEqual(accuracy, 0.95)
        self.assertEqual(lsstm_predict(model, self.X[0]).shape, ())

    def test_objective_non_increasing(self):
        """
        Test that the exact mode updates never increase the objective.
        """
        model = lsstm_fit(self.X, self.y, gamma=1.0, iters=20)
        steps = np.diff(model.history)
        self.assertTrue(np.all(steps <= 1e-9 * max(model.history)))

    def test_single_class(self):
        """
        Test that a single training class gives a constant classifier.
        """
        model = lsstm_fit(self.X, np.ones(40))
        np.testing.assert_array_equal(lsstm_predict(model, self.X), np.ones(40))

    def test_invalid_labels(self):
        """
        Test that labels outside {-1, +1} and non-positive gamma are rejected.
        """
        with self.assertRaises(ValueError):
            lsstm_fit(self.X, np.zeros(40))
        with self.assertRaises(ValueError):
            lsstm_fit(self.X, self.y, gamma=0.0)


class TestSerialisation(unittest.TestCase):

    def test_models_survive_json(self):
        """
        Test that HOLRR and HOPLS documents rebuild models with identical predictions.
        """
        rng = np.random.default_rng(6)
        X = rng.standard_normal((15, 3))
        Y = rng.standard_normal((15, 2, 2))
        holrr = holrr_fit(X, Y, [2, 2, 2], 0.1)
        copy = model_from_dict(json.loads(json.dumps(holrr.to_dict())))
        np.testing.assert_array_equal(holrr_predict(copy, X), holrr_predict(holrr, X))
        Xt = rng.standard_normal((15, 3, 2))
        hopls = hopls_fit(Xt, Y, 2, [2, 1], [1, 2])
        copy = model_from_dict(json.loads(json.dumps(hopls.to_dict())))
        np.testing.assert_array_equal(hopls_predict(copy, Xt), hopls_predict(hopls, Xt))

    def test_unknown_kind(self):
        """
        Test that an unknown model kind is rejected.
        """
        with self.assertRaises(ValueError):
            model_from_dict({"model": "svm"})


if __name__ == "__main__":
    unittest.main()
