# pylint: skip-file
import unittest
from unittest import mock

import numpy as np
from numpy.testing import assert_allclose

from nonstatlqr.dap_policy import DapConfig, DapParams, dap_feedforward, flatten
from nonstatlqr.errors import DimensionMismatch, DisturbanceBoundViolated
from nonstatlqr.lqr_pipeline import ControllerState, build_covariate, build_bias, recover_disturbance, control_step
from nonstatlqr.lqr_system import SystemSpec, system_constants, lower_bound_system, compute_q_inf


def unit_disturbances(rng, n, d_x):
    w = rng.normal(size=(n, d_x))
    return w / np.maximum(1.0, np.linalg.norm(w, axis=1))[:, None] * 0.9


class CovariateTest(unittest.TestCase):

    def test_covariate_reproduces_feedforward(self):
        rng = np.random.default_rng(10)
        d_u, d_x, m = 2, 3, 3
        X = rng.normal(size=(d_u, d_u))
        U_rows = np.linalg.qr(X)[0].T
        Lambda = np.diag([3.0, 0.5])
        M = DapParams(rng.normal(size=(m, d_u, d_x)))
        history = [rng.normal(size=d_x) for _ in range(m)]
        A_t = build_covariate(history, Lambda, U_rows, m)
        self.assertEqual((2, m * d_u * d_x), A_t.shape)
        expected = np.sqrt(np.diag(Lambda))[:, None] * U_rows @ dap_feedforward(M, history)
        assert_allclose(A_t @ flatten(M), expected)

    def test_rank_deficient_rows(self):
        A_t = build_covariate([np.array([1.0, 2.0])], np.diag([4.0, 0.0]), np.eye(2), 1)
        # only the range row survives, scaled by √4
        assert_allclose(A_t, [[2.0, 0.0, 4.0, 0.0]])

    def test_short_history(self):
        A_t = build_covariate([np.array([1.0, 0.0])], np.diag([1.0]), np.eye(1), 3)
        assert_allclose(A_t, [[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]])
        with self.assertRaises(DimensionMismatch):
            build_covariate([np.zeros(2), np.zeros(3)], np.diag([1.0]), np.eye(1), 2)

    def test_bias(self):
        consts = system_constants(SystemSpec(A=np.zeros((2, 2)), B=np.eye(2), R_x=np.eye(2), R_u=np.eye(2)))
        window = [np.array([1.0, -1.0])]
        assert_allclose(build_bias(window, consts), consts.range_factor @ compute_q_inf(consts, window))


class RecoverDisturbanceTest(unittest.TestCase):

    def test_recover(self):
        spec = lower_bound_system()
        w = recover_disturbance(np.zeros(2), np.array([0.5, 0.0]), np.array([-0.2, 0.3]), spec.A, spec.B)
        # x' = -u + w
        assert_allclose(w, [0.3, 0.3])

    def test_bound(self):
        spec = lower_bound_system()
        with self.assertRaises(DisturbanceBoundViolated) as ctx:
            recover_disturbance(np.zeros(2), np.zeros(2), np.array([2.0, 0.0]), spec.A, spec.B, round_index=4)
        self.assertEqual(4, ctx.exception.round_index)
        self.assertAlmostEqual(2.0, ctx.exception.norm)


class ControllerTest(unittest.TestCase):

    def setUp(self):
        self.spec = lower_bound_system(16)
        self.consts = system_constants(self.spec)
        self.dap_cfg = DapConfig(m=1, R=1.0, gamma=1.0)

    def run_controller(self, disturbances):
        controller = ControllerState(self.consts, self.dap_cfg)
        x = np.zeros(2)
        controls = []
        for w in disturbances:
            u = control_step(controller, x)
            controls.append(u)
            x = self.spec.A @ x + self.spec.B @ u + w
        return controller, np.array(controls)

    def test_zero_disturbances(self):
        controller, controls = self.run_controller(np.zeros((10, 2)))
        assert_allclose(controls, np.zeros((10, 2)))
        self.assertEqual(10, controller.t)
        self.assertEqual(10, len(controller.played))
        self.assertEqual(10, len(controller.diagnostics))

    def test_recovers_disturbances(self):
        rng = np.random.default_rng(1)
        disturbances = unit_disturbances(rng, 20, 2)
        controller, _ = self.run_controller(disturbances)
        # w_19 is the newest disturbance visible at round 20
        for j in range(20 - controller.disturbances.maxlen, 20):
            assert_allclose(controller.disturbance(j), disturbances[j - 1], atol=1e-12)
        assert_allclose(controller.disturbance(0), np.zeros(2))

    def test_played_policies_are_feasible(self):
        rng = np.random.default_rng(2)
        controller, controls = self.run_controller(unit_disturbances(rng, 30, 2))
        self.assertEqual(12, controller.h)
        for params in controller.played:
            self.assertTrue(np.linalg.norm(params.blocks[0], ord=2) <= 1.0 + 1e-6)
        self.assertTrue(np.all(np.isfinite(controls)))

    def test_callable(self):
        controller = ControllerState(self.consts, self.dap_cfg)
        assert_allclose(controller(np.zeros(2)), np.zeros(2))
        with self.assertRaises(DimensionMismatch):
            controller(np.zeros(3))


def random_system(rng, d_x=3, d_u=2, n=1000):
    A = rng.normal(size=(d_x, d_x))
    A *= 0.9 / max(1.0, np.max(np.abs(np.linalg.eigvals(A))))
    X, Y = rng.normal(size=(d_x, d_x)), rng.normal(size=(d_u, d_u))
    R_x, R_u = X @ X.T + 0.1 * np.eye(d_x), Y @ Y.T + 0.1 * np.eye(d_u)
    return SystemSpec(A=A, B=rng.normal(size=(d_x, d_u)), R_x=0.5 * (R_x + R_x.T), R_u=0.5 * (R_u + R_u.T), n=n)


class RegressionLossTest(unittest.TestCase):

    def test_target_is_the_truncated_feedforward(self):
        rng = np.random.default_rng(20)
        for _ in range(5):
            consts = system_constants(random_system(rng), h_cap=6)
            window = list(unit_disturbances(rng, consts.h, 3))
            expected = sum(np.linalg.matrix_power(consts.A_cl, j) @ consts.P_inf @ w for j, w in enumerate(window))
            q_star = np.linalg.solve(consts.Sigma_inf, consts.spec.B.T @ expected)
            assert_allclose(compute_q_inf(consts, window), q_star, rtol=1e-8, atol=1e-12)

    def test_loss_is_the_sigma_weighted_feedforward_error(self):
        rng = np.random.default_rng(21)
        m = 3
        for _ in range(10):
            consts = system_constants(random_system(rng), h_cap=6)
            self.assertEqual(2, consts.effective_rank)
            history = list(unit_disturbances(rng, m, 3))
            window = list(unit_disturbances(rng, consts.h, 3))
            M = DapParams(rng.normal(size=(m, 2, 3)))
            A_t = build_covariate(history, consts.Lambda_inf, consts.U_inf, m)
            b_t = build_bias(window, consts)
            residual = A_t @ flatten(M) - b_t
            error = dap_feedforward(M, history) - compute_q_inf(consts, window)
            self.assertAlmostEqual(1.0, residual @ residual / (error @ consts.Sigma_inf @ error), delta=1e-8)


class DelayBookkeepingTest(unittest.TestCase):
    n = 40

    @staticmethod
    def tag(s):
        return s / 50.0 * np.array([np.cos(s), np.sin(s)]) if s >= 1 else np.zeros(2)

    def test_rounds_see_their_own_covariates_and_targets(self):
        spec = SystemSpec(A=np.array([[0.5, 0.1], [0.0, 0.4]]), B=np.array([[1.0], [0.5]]), R_x=np.eye(2),
                          R_u=np.array([[1.0]]), n=1000)
        consts = system_constants(spec, h_cap=3)
        controller = ControllerState(consts, DapConfig(m=2, R=1.0, gamma=1.0))
        h = controller.h
        self.assertGreater(h, 1)
        with mock.patch.object(controller.prodr, "round", wraps=controller.prodr.round) as spy:
            x = np.zeros(2)
            for s in range(1, self.n + 1):
                x = spec.A @ x + spec.B @ control_step(controller, x) + self.tag(s)
        self.assertEqual(self.n, spy.call_count)

        factor = consts.range_factor
        for call in spy.call_args_list:
            t, A_t, delayed = call.args
            expected = np.kron(np.concatenate([self.tag(t - 1), self.tag(t - 2)])[None, :], factor)
            assert_allclose(A_t, expected, atol=1e-10)
            if t <= h:
                self.assertIsNone(delayed)
                continue
            s = t - h
            covariate, bias = delayed
            assert_allclose(covariate, np.kron(np.concatenate([self.tag(s - 1), self.tag(s - 2)])[None, :], factor),
                            atol=1e-10)
            # targets read w_s … w_{t−1}, never w_t
            target = sum(np.linalg.matrix_power(consts.A_cl, j) @ consts.P_inf @ self.tag(s + j) for j in range(h))
            assert_allclose(bias, factor @ consts.Sigma_pinv @ spec.B.T @ target, atol=1e-10)


if __name__ == '__main__':
    unittest.main()
