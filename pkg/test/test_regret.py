# pylint: skip-file
import unittest
from unittest import mock

import numpy as np
from numpy.testing import assert_allclose
from scipy.optimize import OptimizeResult

from nonstatlqr.dap_policy import DapConfig
from nonstatlqr.domain import BoxDomain, DapSpectralDomain
from nonstatlqr.errors import DimensionMismatch, SolverNonConvergent
from nonstatlqr.regret import (QuadraticLosses, dyadic_windows, compute_regret, best_fixed_loss, best_fixed_regret,
                               windowed_static_regret, best_fixed_quadratic, windowed_fixed_policy_regret,
                               fit_loglog_slope)


class DyadicWindowsTest(unittest.TestCase):

    def test_power_of_two(self):
        self.assertEqual([(1, 1), (2, 2), (3, 3), (4, 4), (1, 2), (3, 4), (1, 4)], dyadic_windows(4))

    def test_ragged_end(self):
        windows = dyadic_windows(5)
        self.assertEqual(11, len(windows))
        self.assertIn((5, 5), windows)
        self.assertEqual((1, 5), windows[-1])

    def test_min_length(self):
        self.assertEqual([(1, 2), (3, 4), (1, 4)], dyadic_windows(4, min_length=2))
        self.assertEqual([], dyadic_windows(0))


class RegretTraceTest(unittest.TestCase):

    def test_cumulative(self):
        trace = compute_regret([1.0, 2.0, 3.0], [0.0, 2.0, 1.0], comparator_tv=0.5)
        assert_allclose(trace.differences, [1.0, 0.0, 2.0])
        assert_allclose(trace.cumulative, [1.0, 1.0, 3.0])
        self.assertEqual(3.0, trace.total)
        self.assertEqual(3, trace.n)
        self.assertEqual(0.5, trace.comparator_tv)
        self.assertEqual(3.0, trace.max_window_regret())
        window = next(w for w in trace.windows if (w.start, w.end) == (3, 3))
        self.assertEqual(2.0, window.regret)
        self.assertEqual(1, window.length)

    def test_empty(self):
        trace = compute_regret([], [])
        self.assertEqual(0.0, trace.total)
        self.assertEqual(0.0, trace.max_window_regret())

    def test_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            compute_regret([1.0, 2.0], [1.0])


class BestFixedTest(unittest.TestCase):

    def test_interior_optimum(self):
        rng = np.random.default_rng(0)
        covariates = rng.normal(size=(10, 2, 2))
        u = np.array([0.3, -0.2])
        targets = np.einsum("tpd,d->tp", covariates, u)
        loss, best = best_fixed_loss(covariates, targets, BoxDomain(2, 1.0))
        self.assertAlmostEqual(0.0, loss, places=10)
        assert_allclose(best, u, atol=1e-8)

    def test_clipped_optimum(self):
        covariates = np.ones((2, 1, 1))
        targets = np.full((2, 1), 2.0)
        loss, best = best_fixed_loss(covariates, targets, BoxDomain(1, 1.0))
        assert_allclose(best, [1.0])
        self.assertAlmostEqual(2.0, loss)
        self.assertAlmostEqual(1.0, best_fixed_regret(covariates, targets, [1.5, 1.5], BoxDomain(1, 1.0)))
        self.assertAlmostEqual(0.5, best_fixed_regret(covariates, targets, [1.5, 1.5], BoxDomain(1, 1.0),
                                                      start=2, end=2))
        with self.assertRaises(ValueError):
            best_fixed_regret(covariates, targets, [1.5, 1.5], BoxDomain(1, 1.0), start=0)

    def test_windowed(self):
        covariates = np.ones((4, 1, 1))
        targets = np.full((4, 1), 2.0)
        windows = windowed_static_regret(covariates, targets, np.ones(4), BoxDomain(1, 1.0))
        self.assertEqual(7, len(windows))
        for window in windows:
            self.assertAlmostEqual(0.0, window.regret)

    def test_solver_failure(self):
        failed = OptimizeResult(success=False, status=0, x=np.zeros(1), cost=1.5, optimality=0.25,
                                message="iteration limit")
        with mock.patch("nonstatlqr.regret.lsq_linear", return_value=failed):
            with self.assertRaises(SolverNonConvergent) as ctx:
                best_fixed_loss(np.ones((2, 1, 1)), np.ones((2, 1)), BoxDomain(1, 1.0))
        self.assertEqual(3.0, ctx.exception.best_value)
        self.assertEqual(0.25, ctx.exception.gap)
        self.assertIn("bounded least squares", str(ctx.exception))


class QuadraticLossesTest(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(3)
        self.jacobians = rng.normal(size=(8, 3, 4))
        self.offsets = rng.normal(size=(8, 3))
        self.losses = QuadraticLosses.from_residuals(self.offsets, self.jacobians)
        self.rng = rng

    def test_values(self):
        z = self.rng.normal(size=4)
        residuals = self.offsets + self.jacobians @ z
        assert_allclose(self.losses.values(z), (residuals ** 2).sum(axis=1))
        self.assertEqual(8, self.losses.n)
        self.assertEqual(4, self.losses.dim)

    def test_window(self):
        Q, c, k = self.losses.window(3, 5)
        assert_allclose(Q, self.losses.Q[2:5].sum(axis=0))
        assert_allclose(c, self.losses.c[2:5].sum(axis=0))
        self.assertAlmostEqual(self.losses.k[2:5].sum(), k)
        with self.assertRaises(ValueError):
            self.losses.window(0, 3)
        with self.assertRaises(ValueError):
            self.losses.window(4, 9)

    def test_shapes(self):
        with self.assertRaises(DimensionMismatch):
            QuadraticLosses(np.zeros((2, 3, 3)), np.zeros((2, 2)), np.zeros(2))

    def test_box_optimum_matches_least_squares(self):
        box = BoxDomain(4, 0.3)
        expected, _ = best_fixed_loss(self.jacobians, -self.offsets, box)
        loss, best = best_fixed_quadratic(*self.losses.window(1, 8), box)
        self.assertTrue(box.contains(best))
        self.assertAlmostEqual(expected, loss, delta=1e-4 * max(1.0, expected))

    def test_spectral_optimum(self):
        # ‖z − flatten(2I)‖² over the unit spectral ball is minimised by flatten(I)
        domain = DapSpectralDomain(DapConfig(m=1, R=1.0, gamma=1.0), 2, 2)
        target = np.array([2.0, 0.0, 0.0, 2.0])
        loss, best = best_fixed_quadratic(np.eye(4), -target, float(target @ target), domain)
        assert_allclose(best, [1.0, 0.0, 0.0, 1.0], atol=1e-3)
        self.assertAlmostEqual(2.0, loss, delta=1e-3)

    def test_flat_losses(self):
        loss, best = best_fixed_quadratic(np.zeros((2, 2)), np.zeros(2), 1.5, BoxDomain(2, 1.0))
        self.assertEqual(1.5, loss)
        assert_allclose(best, np.zeros(2))

    def test_windowed_fixed_policy_regret(self):
        box = BoxDomain(4, 0.3)
        learner = self.losses.values(np.zeros(4)) + 1.0
        windows = windowed_fixed_policy_regret(self.losses, learner, box, min_window=4)
        self.assertEqual([(1, 4), (5, 8), (1, 8)], [(w.start, w.end) for w in windows])
        for window in windows:
            best, _ = best_fixed_quadratic(*self.losses.window(window.start, window.end), box)
            self.assertAlmostEqual(learner[window.start - 1:window.end].sum() - best, window.regret, places=6)
            # zero is a member, so the regret is at least one per round
            self.assertGreaterEqual(window.regret, window.length - 1e-3)
        with self.assertRaises(DimensionMismatch):
            windowed_fixed_policy_regret(self.losses, learner[:5], box)


class SlopeTest(unittest.TestCase):

    def test_power_law(self):
        xs = np.array([16.0, 64.0, 256.0, 1024.0])
        self.assertAlmostEqual(2.0 / 3.0, fit_loglog_slope(xs, 3.0 * xs ** (2.0 / 3.0)))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            fit_loglog_slope([1.0], [1.0])
        with self.assertRaises(ValueError):
            fit_loglog_slope([1.0, 2.0], [0.0, 1.0])


if __name__ == '__main__':
    unittest.main()
