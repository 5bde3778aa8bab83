# pylint: disable=invalid-name
"""
This file contains tests for tangent projections, retraction, Riemannian CG,
the projector-splitting step and exponential machines.
"""

import tempfile
import unittest
from pathlib import Path

import numpy as np
from tensorkit.completion import SamplingSet
from tensorkit.completion import tt_complete
from tensorkit.riemannian import ExmModel
from tensorkit.riemannian import Gauges
from tensorkit.riemannian import exm_fit
from tensorkit.riemannian import exm_predict
from tensorkit.riemannian import project_rank_one
from tensorkit.riemannian import projector_splitting_step
from tensorkit.riemannian import read_trace
from tensorkit.riemannian import retract
from tensorkit.riemannian import riemannian_cg
from tensorkit.riemannian import tangent_project
from tensorkit.tt_core import random_train
from tensorkit.tt_core import tt_svd

XOR_X = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
XOR_Y = XOR_X[:, 0] * XOR_X[:, 1]


class TestTangentSpace(unittest.TestCase):

    def setUp(self):
        self.x = random_train([3, 4, 3], [2, 2], seed=0)
        self.z = random_train([3, 4, 3], [3, 3], seed=1)

    def test_projection_is_idempotent(self):
        """
        Test that projecting a tangent vector again leaves it unchanged.
        """
        v = tangent_project(self.x, self.z)
        w = tangent_project(self.x, v)
        np.testing.assert_allclose(w.to_dense(), v.to_dense(), atol=1e-10)

    def test_projection_is_orthogonal(self):
        """
        Test that the projection residual is orthogonal to the tangent vector.
        """
        v = tangent_project(self.x, self.z).to_dense()
        residual = self.z.to_dense() - v
        self.assertAlmostEqual(float(np.vdot(residual, v)), 0.0, delta=1e-10 * np.linalg.norm(v) ** 2)

    def test_point_lies_in_its_tangent_space(self):
        """
        Test that x projects onto itself.
        """
        np.testing.assert_allclose(tangent_project(self.x, self.x).to_dense(), self.x.to_dense(), atol=1e-10)

    def test_inner_product_matches_dense(self):
        """
        Test that the core-wise inner product equals the dense inner product.
        """
        base = Gauges.of(self.x)
        v = tangent_project(base, self.z)
        w = tangent_project(base, random_train([3, 4, 3], [2, 2], seed=2))
        self.assertAlmostEqual(
            v.inner(w), float(np.vdot(v.to_dense(), w.to_dense())), delta=1e-10 * v.norm() * w.norm()
        )
        self.assertLessEqual(max(v.to_train().ranks), 4)

    def test_rank_one_sum(self):
        """
        Test that the rank-one projection equals projecting the dense sum of outer products.
        """
        rng = np.random.default_rng(3)
        factors = [rng.standard_normal((5, I)) for I in (3, 4, 3)]
        coeffs = rng.standard_normal(5)
        dense = np.einsum("m,mi,mj,mk->ijk", coeffs, *factors)
        v = project_rank_one(self.x, factors, coeffs)
        np.testing.assert_allclose(v.to_dense(), tangent_project(self.x, dense).to_dense(), atol=1e-10)

    def test_mode_mismatch(self):
        """
        Test that projecting a tensor of other mode sizes is rejected.
        """
        with self.assertRaises(ValueError):
            tangent_project(self.x, random_train([3, 4], [2]))


class TestRetraction(unittest.TestCase):

    def test_second_order(self):
        """
        Test that the retraction error decays quadratically in the step length.
        """
        x = random_train([3, 4, 3], [2, 2], seed=4)
        v = tangent_project(x, random_train([3, 4, 3], [2, 2], seed=5))
        v = v.combine(1.0 / v.norm())
        errors = []
        for alpha in (1e-2, 1e-3):
            exact = x.to_dense() + alpha * v.to_dense()
            errors.append(np.linalg.norm(retract(x, v, alpha).to_dense() - exact))
        slope = np.log10(errors[0] / errors[1])
        self.assertAlmostEqual(slope, 2.0, delta=0.3)

    def test_zero_step(self):
        """
        Test that a zero step returns the base point itself.
        """
        x = random_train([2, 3], [2], seed=6)
        v = tangent_project(x, random_train([2, 3], [1], seed=7))
        self.assertIs(retract(x, v, 0.0), x)

    def test_ranks_preserved(self):
        """
        Test that the retracted point keeps the ranks of x.
        """
        x = random_train([3, 4, 3], [2, 2], seed=8)
        v = tangent_project(x, random_train([3, 4, 3], [3, 3], seed=9))
        self.assertEqual(retract(x, v, 0.5).ranks, x.ranks)


class TestRiemannianCG(unittest.TestCase):

    def test_recovers_low_rank_target(self):
        """
        Test that CG on 0.5 ||x - T||^2 reaches a target of the same ranks.
        """
        target = random_train([3, 4, 3], [2, 2], seed=10)
        T = target.to_dense()
        x0 = random_train([3, 4, 3], [2, 2], seed=11)
        x, report = riemannian_cg(
            lambda x: 0.5 * float(np.sum((x.to_dense() - T) ** 2)),
            lambda x: x.to_dense() - T,
            x0,
            iters=500,
            tol=1e-10,
        )
        self.assertLess(np.linalg.norm(x.to_dense() - T) / np.linalg.norm(T), 1e-6)
        self.assertTrue(np.all(np.diff(report.objective) <= 0.0))
        self.assertEqual(report.solver, "riemannian_cg")

    def test_completion_matches_alternating_sweeps(self):
        """
        Test that CG on the observed squared error completes a rank-2 tensor to the same
        accuracy as the alternating completion sweeps.
        """
        truth = random_train([6, 6, 6], [2, 2], seed=14).to_dense()
        omega = SamplingSet.uniform(truth, 0.7, seed=15)
        mask = np.zeros(truth.shape, dtype=bool)
        mask[tuple(omega.indices.T)] = True
        observed = np.where(mask, truth, 0.0)

        def residual(x):
            return np.where(mask, x.to_dense() - observed, 0.0)

        x0 = tt_svd(observed / 0.7, max_rank=2)
        x, report = riemannian_cg(
            lambda x: 0.5 * float(np.sum(residual(x) ** 2)), residual, x0, iters=1000, tol=1e-12
        )
        swept, _ = tt_complete([6, 6, 6], omega, 2, sweeps=100, tol=1e-12, seed=5)
        rel = np.linalg.norm(truth)
        self.assertLessEqual(np.linalg.norm(x.to_dense() - truth) / rel, 1e-6)
        self.assertLessEqual(np.linalg.norm(swept.to_dense() - truth) / rel, 1e-6)
        self.assertLessEqual(report.objective[-1], 1e-10 * float(np.sum(observed**2)))

    def test_armijo_constants(self):
        """
        Test that Armijo constants outside (0, 1) are rejected.
        """
        x0 = random_train([2, 2], [1])
        with self.assertRaises(ValueError):
            riemannian_cg(lambda x: 0.0, lambda x: x, x0, c1=1.5)


class TestProjectorSplitting(unittest.TestCase):

    def test_exact_for_rank_r_increment(self):
        """
        Test that one step reproduces A1 exactly when A0 and A1 both have rank r.
        """
        rng = np.random.default_rng(12)
        A0 = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        A1 = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        U, s, Vt = np.linalg.svd(A0, full_matrices=False)
        U1, S1, V1 = projector_splitting_step((U[:, :2], np.diag(s[:2]), Vt[:2].T), A0, A1)
        np.testing.assert_allclose(U1 @ S1 @ V1.T, A1, atol=1e-10)
        np.testing.assert_allclose(U1.T @ U1, np.eye(2), atol=1e-12)

    def test_error_bound_for_full_rank_target(self):
        """
        Test that a rank-1 step towards a full-rank matrix stays within
        ||A1 - A0|| + sigma_2(A1) of it.
        """
        rng = np.random.default_rng(16)
        u, v = rng.standard_normal(6), rng.standard_normal(5)
        A0 = 3.0 * np.outer(u, v)
        A1 = A0 + 0.3 * rng.standard_normal((6, 5))
        self.assertEqual(np.linalg.matrix_rank(A1), 5)
        U = (u / np.linalg.norm(u))[:, None]
        V = (v / np.linalg.norm(v))[:, None]
        S = np.array([[3.0 * np.linalg.norm(u) * np.linalg.norm(v)]])
        U1, S1, V1 = projector_splitting_step((U, S, V), A0, A1)
        sigma = np.linalg.svd(A1, compute_uv=False)
        error = np.linalg.norm(U1 @ S1 @ V1.T - A1)
        self.assertLessEqual(error, np.linalg.norm(A1 - A0) + sigma[1])
        self.assertEqual(S1.shape, (1, 1))

    def test_shape_check(self):
        """
        Test that an increment of the wrong shape is rejected.
        """
        with self.assertRaises(ValueError):
            projector_splitting_step((np.eye(3, 1), np.eye(1), np.eye(2, 1)), np.zeros((3, 3)), np.ones((3, 3)))


class TestExponentialMachines(unittest.TestCase):

    def test_xor_squared_loss(self):
        """
        Test that the squared-loss machine fits the XOR interaction exactly.
        """
        model = exm_fit(XOR_X, XOR_Y, rank=2, iters=50, batch=4)
        self.assertLessEqual(model.trace[-1]["loss"], 1e-6)
        np.testing.assert_allclose(exm_predict(model, XOR_X), XOR_Y, atol=1e-2)

    def test_xor_logistic_loss(self):
        """
        Test that the logistic machine classifies XOR and reduces its loss.
        """
        model = exm_fit(XOR_X, XOR_Y, rank=2, iters=20, batch=4, loss="logistic")
        np.testing.assert_array_equal(np.sign(exm_predict(model, XOR_X)), XOR_Y)
        self.assertLess(model.trace[-1]["loss"], model.trace[0]["loss"])

    def test_planted_sparse_interactions(self):
        """
        Test that minibatch training on ten binary features with two planted pairwise
        interactions reaches a test RMSE within twice the noise level.
        """
        rng = np.random.default_rng(17)
        sigma = 0.3
        w = rng.standard_normal(10)

        def planted(X):
            return 0.5 + X @ w + 1.5 * X[:, 1] * X[:, 3] - 1.5 * X[:, 6] * X[:, 8]

        X = rng.choice([-1.0, 1.0], size=(1000, 10))
        X_test = rng.choice([-1.0, 1.0], size=(200, 10))
        y = planted(X) + sigma * rng.standard_normal(1000)
        model = exm_fit(X, y, rank=4, iters=500, batch=16, seed=18)
        rmse = np.sqrt(np.mean((exm_predict(model, X_test) - planted(X_test)) ** 2))
        self.assertLessEqual(rmse, 2.0 * sigma)

    def test_feasible_ranks(self):
        """
        Test that requested ranks are capped by the mode-size products.
        """
        X = np.random.default_rng(13).standard_normal((10, 4))
        model = exm_fit(X, X[:, 0], rank=3, iters=1)
        self.assertEqual(model.ranks, [1, 2, 3, 2, 1])
        self.assertEqual(model.weights.ranks, [1, 2, 3, 2, 1])

    def test_trace_and_serialisation(self):
        """
        Test that the JSON-lines trace is written and the model document rebuilds
        the same predictions.
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "trace.jsonl"
            model = exm_fit(XOR_X, XOR_Y, iters=5, step=0.5, trace_path=path)
            rows = read_trace(path)
        self.assertEqual(set(rows[0]), {"iter", "loss", "step"})
        self.assertEqual([int(r["iter"]) for r in rows], [1, 2, 3, 4, 5])
        self.assertTrue(all(r["step"] == 0.5 for r in rows))
        copy = ExmModel.from_dict(model.to_dict())
        np.testing.assert_array_equal(exm_predict(copy, XOR_X), exm_predict(model, XOR_X))
        self.assertIsInstance(exm_predict(model, XOR_X[0]), float)

    def test_invalid_settings(self):
        """
        Test that unknown losses and non-positive ranks are rejected.
        """
        with self.assertRaises(ValueError):
            exm_fit(XOR_X, XOR_Y, loss="hinge")
        with self.assertRaises(ValueError):
            exm_fit(XOR_X, XOR_Y, rank=0)
        with self.assertRaises(ValueError):
            exm_fit(XOR_X, XOR_Y[:3])


if __name__ == "__main__":
    unittest.main()
