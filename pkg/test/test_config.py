# pylint: skip-file
import os
import unittest
from dataclasses import replace
from unittest import mock

from nonstatlqr.config import THREADS_ENV, LqrTolerances, ProjectionConfig, SolverConfig, worker_count
from nonstatlqr.errors import (NonstatLqrError, DimensionMismatch, DisturbanceBoundViolated, InvalidBudget,
                               NonConvergent, RoundError, SolverNonConvergent)


class SettingsTest(unittest.TestCase):

    def test_defaults(self):
        self.assertEqual(1e-10, LqrTolerances().tol_dare)
        self.assertEqual(2000, SolverConfig().max_iter)
        self.assertEqual(256, ProjectionConfig().refactor_every)

    def test_replace(self):
        cfg = replace(SolverConfig(), tol=1e-4)
        self.assertEqual(1e-4, cfg.tol)
        self.assertEqual(2000, cfg.max_iter)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            LqrTolerances(tol_dare=0.0)
        with self.assertRaises(ValueError):
            LqrTolerances(max_iter=0)
        with self.assertRaises(ValueError):
            SolverConfig(tol=-1.0)
        with self.assertRaises(ValueError):
            SolverConfig(max_iter=0)
        with self.assertRaises(ValueError):
            ProjectionConfig(refactor_every=0)


class WorkerCountTest(unittest.TestCase):

    def test_from_environment(self):
        with mock.patch.dict(os.environ, {THREADS_ENV: "3"}):
            self.assertEqual(3, worker_count())

    def test_default(self):
        with mock.patch.dict(os.environ, {THREADS_ENV: ""}):
            self.assertEqual(os.cpu_count() or 1, worker_count())

    def test_invalid(self):
        for value in ("three", "0", "-2"):
            with mock.patch.dict(os.environ, {THREADS_ENV: value}):
                with self.assertRaises(ValueError):
                    worker_count()


class ErrorsTest(unittest.TestCase):

    def test_hierarchy(self):
        self.assertTrue(issubclass(DimensionMismatch, ValueError))
        self.assertTrue(issubclass(InvalidBudget, ValueError))
        self.assertTrue(issubclass(SolverNonConvergent, NonstatLqrError))
        self.assertFalse(issubclass(NonConvergent, ValueError))

    def test_attributes(self):
        err = SolverNonConvergent(1.5, 0.25)
        self.assertEqual(0.25, err.gap)
        self.assertIn("gap", str(err))
        err = DisturbanceBoundViolated(1.25, 7)
        self.assertIn("round 7", str(err))
        self.assertNotIn("round", str(DisturbanceBoundViolated(1.25)))

    def test_round_error(self):
        cause = ValueError("bad")
        err = RoundError(3, cause)
        self.assertIs(cause, err.error)
        self.assertEqual("round 3: bad", str(err))


if __name__ == '__main__':
    unittest.main()
