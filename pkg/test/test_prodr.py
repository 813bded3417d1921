# pylint: skip-file
import math
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from nonstatlqr.barrier import squared_loss, surrogate_loss
from nonstatlqr.dap_policy import DapConfig
from nonstatlqr.domain import BoxDomain, DapSpectralDomain
from nonstatlqr.errors import DimensionMismatch, InvalidBounds
from nonstatlqr.lqr_pipeline import build_bias, build_covariate
from nonstatlqr.lqr_system import system_constants, lower_bound_system
from nonstatlqr.prodr import (ProdrState, DelayedProdr, derive_config, lqr_prodr_config, prodr_init,
                              prodr_round, delayed_round)


def random_stream(rng, n, p, d, sigma_b=1.0):
    covariates = rng.uniform(-1.0, 1.0, size=(n, p, d)) / d
    targets = rng.uniform(-sigma_b, sigma_b, size=(n, p)) / p
    return covariates, targets


class DeriveConfigTest(unittest.TestCase):

    def test_assignment(self):
        cfg = derive_config(p=1, d=2, chi=1.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0)
        self.assertEqual(4.0, cfg.G)
        self.assertEqual(24.0, cfg.L)
        gamma = 2 * 4.0 * math.sqrt(2 / (8 * 24.0)) + math.sqrt(48.0)
        self.assertAlmostEqual(gamma, cfg.gamma_param)
        self.assertAlmostEqual(min(1 / (16 * 4.0 * math.sqrt(2)), 1 / (4 * gamma ** 2)), cfg.zeta)
        self.assertAlmostEqual(1 / (2 * gamma ** 2), cfg.eta)
        self.assertAlmostEqual(1 / 96.0, cfg.alpha_exp)

    def test_homogeneity(self):
        first = derive_config(p=2, d=3, chi=1.0, sigma_b=0.0, alpha_row=1.0, R_tilde=1.0)
        second = derive_config(p=2, d=3, chi=2.0, sigma_b=0.0, alpha_row=1.0, R_tilde=1.0)
        self.assertAlmostEqual(2 * first.G, second.G)
        self.assertAlmostEqual(4 * first.L, second.L)

    def test_overrides(self):
        cfg = derive_config(p=1, d=1, chi=1.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0, G=10.0)
        self.assertEqual(10.0, cfg.G)
        self.assertEqual(24.0, cfg.L)
        with self.assertRaises(TypeError):
            derive_config(p=1, d=1, chi=1.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0, foo=1.0)

    def test_invalid(self):
        with self.assertRaises(InvalidBounds):
            derive_config(p=1, d=1, chi=0.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0)
        with self.assertRaises(InvalidBounds):
            derive_config(p=1, d=1, chi=1.0, sigma_b=-1.0, alpha_row=1.0, R_tilde=1.0)
        with self.assertRaises(InvalidBounds):
            derive_config(p=1, d=1, chi=1.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0, tau=0)

    def test_lqr_config(self):
        consts = system_constants(lower_bound_system(64))
        cfg = lqr_prodr_config(consts, DapConfig(m=1, R=1.0, gamma=1.0))
        self.assertEqual(4, cfg.d)
        self.assertEqual(1, cfg.p)
        self.assertEqual(consts.h, cfg.tau)
        self.assertAlmostEqual(4 * cfg.G ** 2, cfg.L)


class ProdrRoundTest(unittest.TestCase):

    def setUp(self):
        self.box = BoxDomain(1, 1.0)
        self.cfg = derive_config(p=1, d=1, chi=1.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0)

    def test_first_round_plays_zero(self):
        state = prodr_init(self.cfg, self.box)
        w_hat, diagnostics = prodr_round(state, np.array([[1.0]]), np.array([0.5]))
        assert_allclose(w_hat, [0.0])
        self.assertEqual(1, diagnostics.round)
        self.assertEqual(0.0, diagnostics.barrier)
        self.assertAlmostEqual(0.25, diagnostics.loss)
        self.assertEqual(1, state.round)

    def test_scalar_script(self):
        cfg = self.cfg
        state = prodr_init(cfg, self.box)
        script = [(1.0, 0.5), (1.0, -0.5), (0.5, 0.25)]
        played = [prodr_round(state, np.array([[a]]), np.array([b]))[0][0] for a, b in script]

        # straight-line reference
        alpha, zeta, eta = cfg.alpha_exp, cfg.zeta, cfg.eta

        def surrogate(grad, anchor, x):
            inner = grad * (x - anchor)
            return (math.sqrt(alpha / 2) * inner + 1 / math.sqrt(2 * alpha)) ** 2, (alpha * inner + 1) * grad

        # round 1: single learner at 0
        g1 = 2 * 1.0 * (1.0 * 0.0 - 0.5)
        acc1 = zeta + g1 ** 2
        x1 = float(np.clip(0.0 - g1 / (zeta * acc1), -1, 1))
        weights = np.array([0.5, 0.5])
        # round 2: learners at x1 and 0
        w2 = weights @ np.array([x1, 0.0])
        g2 = 2 * 1.0 * (1.0 * w2 + 0.5)
        values = []
        for j, (x, acc) in enumerate([(x1, acc1), (0.0, zeta)]):
            value, h = surrogate(g2, w2, x)
            values.append(value)
            acc += h ** 2
            x = float(np.clip(x - h / (zeta * acc), -1, 1))
            if j == 0:
                x1_next = x
            else:
                x2_next = x
        weights = weights * np.exp(-eta * (np.array(values) - min(values)))
        weights = np.append(weights / weights.sum() * 2 / 3, 1 / 3)
        w3 = weights @ np.array([x1_next, x2_next, 0.0])

        self.assertEqual(0.0, played[0])
        self.assertAlmostEqual(w2, played[1], places=10)
        self.assertAlmostEqual(w3, played[2], places=10)

    def test_zero_covariates_keep_uniform_weights(self):
        state = prodr_init(derive_config(p=1, d=2, chi=2.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0),
                           BoxDomain(2, 1.0))
        for _ in range(3):
            prodr_round(state, np.zeros((1, 2)), np.array([0.7]))
        assert_allclose(state.flh.weights, np.full(4, 0.25))

    def test_proper_and_dominated(self):
        rng = np.random.default_rng(21)
        box = BoxDomain(3, 0.5)
        cfg = derive_config(p=1, d=3, chi=box.chi, sigma_b=1.0, alpha_row=1.0, R_tilde=box.R_tilde)
        state = prodr_init(cfg, box)
        covariates, targets = random_stream(rng, 60, 1, 3)
        for A, b in zip(covariates, targets):
            w_hat, diagnostics = prodr_round(state, A, b)
            self.assertTrue(box.contains(w_hat))
            # the played loss never exceeds the surrogate loss of the improper prediction
            self.assertLessEqual(squared_loss(A, b, w_hat), diagnostics.loss + 1e-6)
            u = box.project(rng.normal(size=3))
            self.assertAlmostEqual(squared_loss(A, b, u), surrogate_loss(A, b, u, box, cfg.G)[0])

    def test_protocol_errors(self):
        state = ProdrState(self.cfg, self.box)
        with self.assertRaises(RuntimeError):
            state.update(np.array([[1.0]]), np.array([0.0]))
        state.predict(np.array([[1.0]]))
        self.assertTrue(state.awaiting_feedback)
        with self.assertRaises(RuntimeError):
            state.predict(np.array([[1.0]]))
        with self.assertRaises(DimensionMismatch):
            state.update(np.ones((2, 1)), np.zeros(2))
        state.update(np.array([[1.0]]), np.array([0.0]))
        self.assertFalse(state.awaiting_feedback)

    def test_domain_dimension(self):
        with self.assertRaises(DimensionMismatch):
            ProdrState(self.cfg, BoxDomain(2, 1.0))


class DelayedTest(unittest.TestCase):

    def setUp(self):
        self.box = BoxDomain(2, 1.0)
        self.cfg = derive_config(p=2, d=2, chi=2.0, sigma_b=1.0, alpha_row=1.0, R_tilde=1.0)
        self.covariates, self.targets = random_stream(np.random.default_rng(3), 30, 2, 2)

    def test_unit_delay_matches_direct_rounds(self):
        direct = prodr_init(self.cfg, self.box)
        delayed = DelayedProdr(self.cfg, self.box, tau=1)
        for t, (A, b) in enumerate(zip(self.covariates, self.targets), start=1):
            expected, _ = prodr_round(direct, A, b)
            feedback = None if t == 1 else (self.covariates[t - 2], self.targets[t - 2])
            assert_array_equal(expected, delayed_round(delayed, t, A, feedback))

    def test_round_robin(self):
        delayed = DelayedProdr(self.cfg, self.box, tau=2)
        self.assertEqual(0, delayed.instance_for(1))
        self.assertEqual(1, delayed.instance_for(2))
        self.assertEqual(0, delayed.instance_for(3))
        for t, A in enumerate(self.covariates[:10], start=1):
            feedback = None if t <= 2 else (self.covariates[t - 3], self.targets[t - 3])
            w_hat, diagnostics = delayed.round(t, A, feedback)
            self.assertEqual(t, diagnostics.round)
            self.assertTrue(self.box.contains(w_hat))
        self.assertEqual([5, 5], [instance.round for instance in delayed.instances])
        # each instance saw every second loss, the last one of each is still pending
        self.assertEqual([5, 5], [instance.flh.active_learners for instance in delayed.instances])

    def test_first_rounds_start_at_zero(self):
        delayed = DelayedProdr(self.cfg, self.box, tau=3)
        for t in range(1, 4):
            w_hat, _ = delayed.round(t, self.covariates[t - 1])
            assert_allclose(w_hat, np.zeros(2))

    def test_schedule_errors(self):
        delayed = DelayedProdr(self.cfg, self.box, tau=2)
        with self.assertRaises(ValueError):
            delayed.round(2, self.covariates[0])
        with self.assertRaises(ValueError):
            delayed.round(1, self.covariates[0], (self.covariates[0], self.targets[0]))
        delayed.round(1, self.covariates[0])
        delayed.round(2, self.covariates[1])
        with self.assertRaises(ValueError):
            delayed.round(3, self.covariates[2])
        with self.assertRaises(InvalidBounds):
            DelayedProdr(self.cfg, self.box, tau=0)

    def test_each_instance_learns_from_its_own_round(self):
        tau, n = 5, 23
        delayed = DelayedProdr(self.cfg, self.box, tau=tau)
        history = []
        for t in range(1, n + 1):
            feedback = None if t <= tau else (self.covariates[t - tau - 1], self.targets[t - tau - 1])
            _, diagnostics = delayed.round(t, self.covariates[t - 1], feedback)
            history.append(diagnostics)
            if t > tau:
                old = history[t - tau - 1]
                self.assertEqual(t - tau, old.round)
                expected, _ = surrogate_loss(self.covariates[t - tau - 1], self.targets[t - tau - 1], old.w,
                                             self.box, self.cfg.G)
                self.assertAlmostEqual(expected, old.loss, places=10)
            # the last τ rounds still wait for their targets
            for pending in history[max(0, t - tau):]:
                self.assertIsNone(pending.loss)
        self.assertEqual([5, 5, 5, 4, 4], [instance.round for instance in delayed.instances])
        self.assertTrue(all(diagnostics.loss is not None for diagnostics in history[:n - tau]))


class ExpConcavityTest(unittest.TestCase):

    def check_pairs(self, rng, pairs, cfg, domain):
        box = domain.enclosing_box()
        for A, b in pairs:
            for _ in range(20):
                w1 = rng.uniform(-box.radius, box.radius)
                w2 = rng.uniform(-box.radius, box.radius)
                value1, gradient = surrogate_loss(A, b, w1, domain, cfg.G)
                value2, _ = surrogate_loss(A, b, w2, domain, cfg.G)
                inner = gradient @ (w2 - w1)
                self.assertGreaterEqual(value2, value1 + inner + inner ** 2 / (4 * cfg.L) - 1e-8)

    def test_box_losses(self):
        rng = np.random.default_rng(30)
        box = BoxDomain(3, [0.5, 0.2, 0.1])
        cfg = derive_config(p=1, d=3, chi=box.chi, sigma_b=1.0, alpha_row=1.0, R_tilde=box.R_tilde)
        self.assertAlmostEqual(1 / (4 * cfg.L), cfg.alpha_exp)
        covariates, targets = random_stream(rng, 15, 1, 3)
        self.check_pairs(rng, zip(covariates, targets), cfg, box)

    def test_lqr_losses(self):
        rng = np.random.default_rng(31)
        consts = system_constants(lower_bound_system(64))
        dap_cfg = DapConfig(m=1, R=1.0, gamma=1.0)
        cfg = lqr_prodr_config(consts, dap_cfg)
        domain = DapSpectralDomain(dap_cfg, 2, 2)

        def disturbance():
            return np.array([rng.choice([-1.0, 1.0]), 1.0]) / math.sqrt(2)

        pairs = []
        for _ in range(15):
            A = build_covariate([disturbance()], consts.Lambda_inf, consts.U_inf, 1)
            b = build_bias([disturbance() for _ in range(consts.h)], consts)
            pairs.append((A, b))
        self.check_pairs(rng, pairs, cfg, domain)


if __name__ == '__main__':
    unittest.main()
