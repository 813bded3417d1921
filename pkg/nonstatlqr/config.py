# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Tolerances, iteration budgets and environment settings shared by the numerical modules.

All settings are frozen dataclasses so they can be passed around freely and shared between
threads. Use :func:`dataclasses.replace` to derive a modified copy.
"""

import logging
import os
from dataclasses import dataclass

logger = logging.getLogger(__name__)

THREADS_ENV = "NONSTAT_LQR_THREADS"


@dataclass(frozen=True)
class LqrTolerances:
    """Tolerances for the Riccati solver and the derived spectral data."""

    tol_dare: float = 1e-10
    """Operator norm residual accepted for the Riccati fixed point."""

    max_iter: int = 100000
    """Maximum number of fixed point iterations."""

    rank_tol: float = 1e-9
    """Eigenvalues below this value are treated as exactly zero."""

    tol_psd: float = 1e-9
    """Most negative eigenvalue tolerated for R_x and R_u."""

    rho_tol: float = 1e-9
    """Margin below 1 required for the spectral radius of the closed loop."""

    inner_cond_limit: float = 1e12
    """Condition number above which R_u + BᵀPB counts as singular."""

    def __post_init__(self):
        if self.tol_dare <= 0 or self.rank_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be 1 or greater, was {self.max_iter}")


@dataclass(frozen=True)
class SolverConfig:
    """Settings of the min-max barrier and its projection (projected subgradient descent)."""

    tol: float = 1e-6
    max_iter: int = 2000
    step: float = 1.0
    """Step constant c of the c·R̃/√k schedule; each step is capped by the Polyak step."""

    zero_tol: float = 1e-9
    """|aᵀ(Π(w) − w)| below this value selects the zero subgradient."""

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, was {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be 1 or greater, was {self.max_iter}")


@dataclass(frozen=True)
class ProjectionConfig:
    """Settings of the Online Newton Step preconditioner and its Mahalanobis projection."""

    tol: float = 1e-8
    max_iter: int = 500
    refactor_every: int = 256
    """Number of Sherman–Morrison updates between two full re-inversions."""

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, was {self.tol}")
        if self.refactor_every < 1:
            raise ValueError("refactor_every must be 1 or greater")


def worker_count() -> int:
    """
    Number of parallel workers for sweeps.

    Read from the :code:`NONSTAT_LQR_THREADS` environment variable, defaults to the number of
    available cores.

    :raises ValueError: if the variable is set but not a positive integer.
    """
    value = os.environ.get(THREADS_ENV)
    if value is None or value == "":
        return os.cpu_count() or 1
    try:
        count = int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, was '{value}'")
    if count < 1:
        raise ValueError(f"{THREADS_ENV} must be 1 or greater, was {count}")
    logger.debug("using %d workers from %s", count, THREADS_ENV)
    return count
