# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Regret accounting.

Dynamic regret compares the learner's losses with those of a comparator sequence round by round.
Windowed tables restrict the sum to the dyadic windows :code:`[j·2^k + 1, (j+1)·2^k]`. The dynamic table
compares with the given comparator sequence; the static table compares with the best fixed decision of
each window, fitted after the fact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np
from scipy.optimize import lsq_linear

from .barrier import solve_conic
from .domain import BoxDomain, DecisionDomain
from .errors import DimensionMismatch, SolverNonConvergent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowRegret:
    """Regret restricted to the rounds ``start`` … ``end`` (inclusive, 1-based)."""

    start: int
    end: int
    regret: float

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass
class RegretTrace:
    """
    Per-round losses of a learner and a comparator and their cumulative difference.

    :param learner_losses: losses of the learner
    :param comparator_losses: losses of the comparator under the same disturbances
    :param windows: dynamic regret against the comparator on every dyadic window
    :param static_windows: regret against the best fixed decision of every dyadic window, if computed
    """

    learner_losses: np.ndarray
    comparator_losses: np.ndarray
    comparator_tv: Optional[float] = None
    windows: List[WindowRegret] = field(default_factory=list)
    static_windows: List[WindowRegret] = field(default_factory=list)

    @property
    def differences(self) -> np.ndarray:
        return self.learner_losses - self.comparator_losses

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.differences)

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if len(self.learner_losses) else 0.0

    @property
    def n(self) -> int:
        return len(self.learner_losses)

    def max_window_regret(self) -> float:
        return max((w.regret for w in self.windows), default=0.0)

    def max_static_window_regret(self) -> float:
        return max((w.regret for w in self.static_windows), default=0.0)


def dyadic_windows(n: int, min_length: int = 1) -> List[Tuple[int, int]]:
    """
    All windows :code:`[j·2^k + 1, min((j+1)·2^k, n)]` with :code:`2^k ≥ min_length`.

    The largest level is the first power of two that covers all n rounds.
    """
    if n < 1:
        return []
    windows = []
    length = 1
    while length < min_length:
        length *= 2
    while length < 2 * n:
        for start in range(0, n, length):
            windows.append((start + 1, min(start + length, n)))
        length *= 2
    return windows


def compute_regret(learner_losses: Sequence[float], comparator_losses: Sequence[float],
                   comparator_tv: Optional[float] = None, min_window: int = 1) -> RegretTrace:
    """
    Build the :class:`RegretTrace` of two equally long loss sequences, including the dyadic window table.

    :raises DimensionMismatch: if the lengths differ
    """
    learner = np.asarray(learner_losses, dtype=float)
    comparator = np.asarray(comparator_losses, dtype=float)
    if learner.shape != comparator.shape or learner.ndim != 1:
        raise DimensionMismatch(f"loss sequences of shapes {learner.shape} and {comparator.shape}")
    prefix = np.concatenate([[0.0], np.cumsum(learner - comparator)])
    windows = [WindowRegret(start, end, float(prefix[end] - prefix[start - 1]))
               for start, end in dyadic_windows(len(learner), min_window)]
    return RegretTrace(learner, comparator, comparator_tv, windows)


def best_fixed_loss(covariates: np.ndarray, targets: np.ndarray, domain: BoxDomain) -> Tuple[float, np.ndarray]:
    """
    :code:`min_{u∈box} Σ_t ‖A_t u − b_t‖²` over the given rounds.

    :param covariates: array of shape (rounds, p, d)
    :param targets: array of shape (rounds, p)
    :return: (optimal loss, minimizer)
    :raises SolverNonConvergent: if the bounded least squares solver reports failure
    """
    covariates = np.asarray(covariates, dtype=float)
    targets = np.asarray(targets, dtype=float)
    stacked = covariates.reshape(-1, covariates.shape[-1])
    result = lsq_linear(stacked, targets.reshape(-1), bounds=(domain.lower, domain.upper), method="bvls")
    if not result.success:
        raise SolverNonConvergent(2.0 * float(result.cost), float(result.optimality), "bounded least squares")
    residual = stacked @ result.x - targets.reshape(-1)
    return float(residual @ residual), result.x


def best_fixed_regret(covariates: np.ndarray, targets: np.ndarray, learner_losses: Sequence[float],
                      domain: BoxDomain, start: int = 1, end: Optional[int] = None) -> float:
    """
    Static regret of the learner on rounds ``start`` … ``end`` against the best fixed box member.
    """
    learner_losses = np.asarray(learner_losses, dtype=float)
    end = len(learner_losses) if end is None else end
    if not 1 <= start <= end <= len(learner_losses):
        raise ValueError(f"invalid window [{start}, {end}] for {len(learner_losses)} rounds")
    best, _ = best_fixed_loss(covariates[start - 1:end], targets[start - 1:end], domain)
    return float(learner_losses[start - 1:end].sum()) - best


def windowed_static_regret(covariates: np.ndarray, targets: np.ndarray, learner_losses: Sequence[float],
                           domain: BoxDomain, min_window: int = 1) -> List[WindowRegret]:
    """Static regret against the best fixed comparator of every dyadic window."""
    return [WindowRegret(start, end, best_fixed_regret(covariates, targets, learner_losses, domain, start, end))
            for start, end in dyadic_windows(len(learner_losses), min_window)]


@dataclass(frozen=True, eq=False)
class QuadraticLosses:
    """
    Round losses :code:`ℓ_t(z) = zᵀQ_t z + 2c_tᵀz + k_t` of a fixed decision z.

    Prefix sums are kept so that the loss of any window is a single difference.

    :param Q: array of shape (rounds, d, d), symmetric positive semidefinite
    :param c: array of shape (rounds, d)
    :param k: array of shape (rounds,)
    """

    Q: np.ndarray
    c: np.ndarray
    k: np.ndarray
    _prefix: Tuple[np.ndarray, np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        c = np.asarray(self.c, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2] or c.shape != Q.shape[:2] or k.shape != Q.shape[:1]:
            raise DimensionMismatch(f"quadratic losses of shapes {Q.shape}, {c.shape} and {k.shape}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "k", k)
        prefix = tuple(np.concatenate([np.zeros((1,) + a.shape[1:]), np.cumsum(a, axis=0)]) for a in (Q, c, k))
        object.__setattr__(self, "_prefix", prefix)

    @classmethod
    def from_residuals(cls, offsets: np.ndarray, jacobians: np.ndarray) -> QuadraticLosses:
        """
        Losses :code:`‖o_t + J_t z‖²` of affine residuals.

        :param offsets: array of shape (rounds, k)
        :param jacobians: array of shape (rounds, k, d)
        """
        offsets = np.asarray(offsets, dtype=float)
        jacobians = np.asarray(jacobians, dtype=float)
        Q = np.einsum("tki,tkj->tij", jacobians, jacobians)
        c = np.einsum("tki,tk->ti", jacobians, offsets)
        k = np.einsum("tk,tk->t", offsets, offsets)
        return cls(Q, c, k)

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def dim(self) -> int:
        return self.Q.shape[1]

    def values(self, z: np.ndarray) -> np.ndarray:
        """Per-round losses of the fixed decision z."""
        z = np.asarray(z, dtype=float)
        return np.einsum("i,tij,j->t", z, self.Q, z) + 2.0 * self.c @ z + self.k

    def window(self, start: int, end: int) -> Tuple[np.ndarray, np.ndarray, float]:
        """Summed (Q, c, k) of the rounds ``start`` … ``end`` (inclusive, 1-based)."""
        if not 1 <= start <= end <= self.n:
            raise ValueError(f"invalid window [{start}, {end}] for {self.n} rounds")
        Q, c, k = (p[end] - p[start - 1] for p in self._prefix)
        return Q, c, float(k)


def best_fixed_quadratic(Q: np.ndarray, c: np.ndarray, k: float,
                         domain: DecisionDomain) -> Tuple[float, np.ndarray]:
    """
    :code:`min_{z∈D} zᵀQz + 2cᵀz + k` for a positive semidefinite Q.

    The linear term must lie in the range of Q, as it does for sums of squared affine residuals.

    :return: (optimal loss, minimizer)
    :raises SolverNonConvergent: if the conic solver does not report an optimum
    """
    Q = 0.5 * (Q + Q.T)
    values, vectors = np.linalg.eigh(Q)
    keep = values > 1e-12 * max(float(values.max(initial=0.0)), 1.0)
    if not np.any(keep):
        return float(k), np.zeros(len(c))
    root = np.sqrt(values[keep])
    F = root[:, None] * vectors[:, keep].T
    g = (vectors[:, keep].T @ c) / root
    z = cp.Variable(len(c))
    problem = cp.Problem(cp.Minimize(cp.sum_squares(F @ z + g)), domain.constraints(z))
    if not solve_conic(problem) or z.value is None:
        raise SolverNonConvergent(float(k), math.inf, "fixed decision fit")
    best = domain.project(np.asarray(z.value).reshape(-1))
    return float(best @ Q @ best + 2.0 * c @ best + k), best


def windowed_fixed_policy_regret(losses: QuadraticLosses, learner_losses: Sequence[float],
                                 domain: DecisionDomain, min_window: int = 1) -> List[WindowRegret]:
    """
    Static regret of the learner against the best fixed member of ``domain`` on every dyadic window.

    Each window gets its own comparator; its loss is read from the quadratic round losses.
    """
    learner_losses = np.asarray(learner_losses, dtype=float)
    if learner_losses.shape != (losses.n,):
        raise DimensionMismatch(f"{learner_losses.shape[0]} learner losses for {losses.n} rounds")
    prefix = np.concatenate([[0.0], np.cumsum(learner_losses)])
    result = []
    for start, end in dyadic_windows(losses.n, min_window):
        best, _ = best_fixed_quadratic(*losses.window(start, end), domain)
        result.append(WindowRegret(start, end, float(prefix[end] - prefix[start - 1]) - best))
    logger.debug("fitted %d fixed comparators", len(result))
    return result


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """
    Least squares slope of :code:`log y` against :code:`log x`.

    :raises ValueError: for fewer than two points or non-positive values
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need at least two points of equal length")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive values")
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)
