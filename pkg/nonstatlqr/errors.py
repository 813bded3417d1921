# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Exceptions raised by the *nonstatlqr* library.

All library specific errors derive from :class:`NonstatLqrError`, so a caller can catch
everything coming from the numerics with a single ``except`` clause. Errors that signal
invalid input additionally derive from :external:class:`ValueError`.
"""

from typing import Optional


class NonstatLqrError(Exception):
    """Base class of all errors raised by this library."""


class NonConvergent(NonstatLqrError):
    """
    The Riccati fixed point iteration did not reach the requested residual.

    :param residual: operator norm residual after the last iteration
    :param iterations: number of iterations performed
    """

    def __init__(self, residual: float, iterations: int):
        super().__init__(f"Riccati iteration did not converge: residual {residual:.3e} "
                         f"after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class SingularInnerMatrix(NonstatLqrError):
    """The matrix R_u + BᵀPB could not be inverted (ill-posed system for the recursion)."""


class UnstableSystem(NonstatLqrError):
    """The closed loop is not stable, i.e. the spectral radius of A − B·K∞ is not below 1."""


class DimensionMismatch(NonstatLqrError, ValueError):
    """Array arguments have incompatible shapes."""


class InvalidBounds(NonstatLqrError, ValueError):
    """Bounds handed to the parameter derivation are not strictly positive."""


class InvalidBudget(NonstatLqrError, ValueError):
    """The path-length budget C_n of the lower bound construction is not positive."""


class SolverNonConvergent(NonstatLqrError):
    """
    An optimisation did not certify its solution within the iteration budget.

    :param best_value: best objective value found
    :param gap: upper bound on the distance of ``best_value`` to the optimum
    :param task: what was solved, for the message
    """

    def __init__(self, best_value: float, gap: float, task: str = "min-max projection"):
        super().__init__(f"{task} did not converge: best value {best_value:.6e}, gap {gap:.3e}")
        self.best_value = best_value
        self.gap = gap


class ProjectionNonConvergent(NonstatLqrError):
    """The Mahalanobis projection of the Online Newton Step did not converge."""

    def __init__(self, violation: float, iterations: int):
        super().__init__(f"Mahalanobis projection did not converge after {iterations} "
                         f"iterations (variational violation {violation:.3e})")
        self.violation = violation
        self.iterations = iterations


class DisturbanceBoundViolated(NonstatLqrError):
    """A disturbance with ‖w‖₂ > 1 was observed."""

    def __init__(self, norm: float, round_index: Optional[int] = None):
        where = f" at round {round_index}" if round_index is not None else ""
        super().__init__(f"disturbance norm {norm:.6f} exceeds 1{where}")
        self.norm = norm
        self.round_index = round_index


class NumericalOverflow(NonstatLqrError):
    """The simulated state left the numerically sane region."""

    def __init__(self, round_index: int, state_norm: float):
        super().__init__(f"state norm {state_norm:.3e} exceeds the overflow limit at round {round_index}")
        self.round_index = round_index
        self.state_norm = state_norm


class RoundError(NonstatLqrError):
    """
    Wraps an error raised while processing a single learning round.

    The original exception is available as :code:`__cause__` and as :attr:`error`.
    """

    def __init__(self, round_index: int, error: Exception):
        super().__init__(f"round {round_index}: {error}")
        self.round_index = round_index
        self.error = error


class CommandLineError(NonstatLqrError):
    """Raised by the command line parser instead of calling :external:func:`sys.exit`."""
