# pylint: skip-file
import unittest

import numpy as np
from numpy.testing import assert_allclose

from nonstatlqr.dap_policy import (DapConfig, DapParams, DapSequence, dap_control, dap_feedforward, flatten,
                                   deflatten, project_dap, is_member, tv_of_sequence, lower_bound_dap,
                                   dap_distance, dap_block_norms, sequence_from_blocks)
from nonstatlqr.errors import DimensionMismatch


class DapConfigTest(unittest.TestCase):

    def test_bounds(self):
        cfg = DapConfig(m=3, R=2.0, gamma=0.5)
        assert_allclose(cfg.bounds, [2.0, 1.0, 0.5])
        self.assertEqual(0.5, cfg.block_bound(3))
        self.assertEqual((3, 2, 4), cfg.zeros(2, 4).blocks.shape)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            DapConfig(m=0)
        with self.assertRaises(ValueError):
            DapConfig(R=0.0)
        with self.assertRaises(ValueError):
            DapConfig(gamma=1.5)
        with self.assertRaises(ValueError):
            DapConfig(gamma=0.0)


class DapParamsTest(unittest.TestCase):

    def test_promotion_and_access(self):
        M = DapParams([[1.0, 2.0]])
        self.assertEqual((1, 1, 2), M.blocks.shape)
        assert_allclose(M[1], [[1.0, 2.0]])
        with self.assertRaises(IndexError):
            M[2]
        with self.assertRaises(DimensionMismatch):
            DapParams(np.zeros(3))

    def test_read_only(self):
        M = DapParams(np.zeros((1, 2, 2)))
        with self.assertRaises(ValueError):
            M.blocks[0, 0, 0] = 1.0

    def test_sequence_shapes(self):
        seq = DapSequence([DapParams(np.zeros((1, 2, 2)))])
        with self.assertRaises(DimensionMismatch):
            seq.append(DapParams(np.zeros((2, 2, 2))))
        with self.assertRaises(DimensionMismatch):
            DapSequence([DapParams(np.zeros((1, 2, 2))), DapParams(np.zeros((1, 1, 2)))])
        combined = seq + sequence_from_blocks([np.ones((1, 2, 2))])
        self.assertEqual(2, len(combined))


class ControlTest(unittest.TestCase):

    def test_control(self):
        M = DapParams(np.array([[[1.0, 0.0]], [[0.0, 2.0]]]))
        K = np.array([[0.5, 0.5]])
        x = np.array([2.0, 2.0])
        history = [np.array([1.0, 1.0]), np.array([3.0, 4.0])]
        # -K x - (M1 w_{t-1} + M2 w_{t-2}) = -2 - (1 + 8)
        assert_allclose(dap_control(M, K, x, history), [-11.0])

    def test_short_history_is_zero_padded(self):
        M = DapParams(np.array([[[1.0, 0.0]], [[0.0, 2.0]]]))
        assert_allclose(dap_feedforward(M, [np.array([3.0, 1.0])]), [3.0])
        assert_allclose(dap_feedforward(M, []), [0.0])

    def test_shape_errors(self):
        M = DapParams(np.zeros((1, 1, 2)))
        with self.assertRaises(DimensionMismatch):
            dap_control(M, np.zeros((2, 2)), np.zeros(2), [])
        with self.assertRaises(DimensionMismatch):
            dap_control(M, np.zeros((1, 2)), np.zeros(3), [])
        with self.assertRaises(DimensionMismatch):
            dap_control(M, np.zeros((1, 2)), np.zeros(2), [np.zeros(3)])


class FlattenTest(unittest.TestCase):

    def test_column_major_layout(self):
        M = DapParams(np.array([[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]]))
        assert_allclose(flatten(M), [1.0, 4.0, 2.0, 5.0, 3.0, 6.0])

    def test_inverse(self):
        rng = np.random.default_rng(5)
        M = DapParams(rng.normal(size=(3, 2, 4)), R=2.0, gamma=0.5)
        back = deflatten(flatten(M), 3, 2, 4, R=2.0, gamma=0.5)
        assert_allclose(back.blocks, M.blocks)
        self.assertEqual(M.config, back.config)

    def test_wrong_length(self):
        with self.assertRaises(DimensionMismatch):
            deflatten(np.zeros(5), 1, 2, 3)


class ProjectionTest(unittest.TestCase):

    def test_scalar_clip(self):
        assert_allclose(project_dap(DapParams([[2.0]])).blocks, [[[1.0]]])

    def test_clip_to_decayed_bound(self):
        rng = np.random.default_rng(9)
        M = DapParams(5.0 * rng.normal(size=(2, 2, 3)), R=2.0, gamma=0.5)
        projected = project_dap(M)
        assert_allclose(dap_block_norms(projected), [2.0, 1.0], rtol=1e-10)
        self.assertTrue(is_member(projected))
        self.assertFalse(is_member(M))

    def test_feasible_unchanged(self):
        M = DapParams(np.array([[[0.3, 0.0], [0.0, -0.2]]]))
        assert_allclose(project_dap(M).blocks, M.blocks)

    def test_projection_is_idempotent(self):
        rng = np.random.default_rng(2)
        once = project_dap(DapParams(3.0 * rng.normal(size=(2, 3, 3)), gamma=0.8))
        assert_allclose(project_dap(once).blocks, once.blocks, atol=1e-12)


class VariationTest(unittest.TestCase):

    def test_constant_sequence(self):
        M = lower_bound_dap(0.5)
        self.assertEqual(0.0, tv_of_sequence(DapSequence([M, M, M])))
        self.assertEqual(0.0, tv_of_sequence(DapSequence([M])))

    def test_entrywise_sum(self):
        seq = DapSequence([lower_bound_dap(0.5), lower_bound_dap(-0.5), lower_bound_dap(0.0)])
        self.assertAlmostEqual(1.5, tv_of_sequence(seq))
        self.assertAlmostEqual(1.0, dap_distance(seq[0], seq[1]))

    def test_empty(self):
        with self.assertRaises(ValueError):
            tv_of_sequence(DapSequence())

    def test_lower_bound_dap(self):
        assert_allclose(lower_bound_dap(0.25).blocks, [[[0.0, -0.25], [0.0, 0.0]]])


if __name__ == '__main__':
    unittest.main()
