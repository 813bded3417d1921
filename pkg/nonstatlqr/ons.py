# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Online Newton Step over a box, and the exp-concave quadratic surrogates it consumes.

Round 1 predicts 0. After observing a gradient ∇ the learner sets

.. code-block:: text

    A ← A + ∇∇ᵀ
    y = w − (1/β) A⁻¹∇
    w ← argmin_{x∈box} (y − x)ᵀ A (y − x)

with :code:`A = ζI` initially and :code:`β = ζ`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from .config import ProjectionConfig
from .domain import BoxDomain
from .errors import DimensionMismatch, InvalidBounds, ProjectionNonConvergent

logger = logging.getLogger(__name__)

DEFAULT_PROJECTION = ProjectionConfig()


@dataclass
class OnsState:
    """
    State of one Online Newton Step learner.

    Instances are single-owner mutable; :func:`ons_update` changes them in place.
    """

    w: np.ndarray
    A_acc: np.ndarray
    A_inv: np.ndarray
    zeta: float
    domain: BoxDomain
    start_time: int = 1
    beta: Optional[float] = None
    updates: int = 0

    def __post_init__(self):
        if self.beta is None:
            self.beta = self.zeta

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def predict(self) -> np.ndarray:
        """The current iterate, the prediction for the next round."""
        return self.w


def ons_init(d: int, zeta: float, domain: BoxDomain, start_time: int = 1) -> OnsState:
    """
    A fresh learner predicting 0 with :code:`A_acc = ζI`.

    :raises ValueError: if ``zeta`` is not positive
    :raises InvalidBounds: if the domain does not contain 0
    :raises DimensionMismatch: if the domain has a different dimension
    """
    if not zeta > 0:
        raise ValueError(f"zeta must be positive, was {zeta}")
    if domain.dim != d:
        raise DimensionMismatch(f"domain has dimension {domain.dim}, learner has {d}")
    zero = np.zeros(d)
    if not domain.contains(zero):
        raise InvalidBounds("the ONS domain must contain 0")
    return OnsState(w=zero, A_acc=zeta * np.eye(d), A_inv=np.eye(d) / zeta, zeta=zeta,
                    domain=domain, start_time=start_time)


def kkt_violation(x: np.ndarray, y: np.ndarray, A: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                  tol: float = 0.0) -> float:
    """Largest violation of the optimality conditions of :code:`min_{lower≤x≤upper} (x−y)ᵀA(x−y)`."""
    gradient = A @ (x - y)
    at_lower = x <= lower + tol
    at_upper = x >= upper - tol
    violation = np.abs(gradient)
    violation = np.where(at_lower, np.maximum(-gradient, 0.0), violation)
    violation = np.where(at_upper, np.maximum(gradient, 0.0), violation)
    return float(violation.max()) if violation.size else 0.0


def mahalanobis_box_projection(y: np.ndarray, A: np.ndarray, domain: BoxDomain,
                               cfg: ProjectionConfig = DEFAULT_PROJECTION) -> np.ndarray:
    """
    :code:`argmin_{x∈box} (y − x)ᵀ A (y − x)` by cyclic coordinate descent.

    :raises ProjectionNonConvergent: if the iterate still moves by more than ``cfg.tol`` after
        ``cfg.max_iter`` sweeps
    """
    lower, upper = domain.lower, domain.upper
    if np.all(y >= lower) and np.all(y <= upper):
        return y
    x = np.clip(y, lower, upper)
    diagonal = np.diag(A)
    for sweep in range(1, cfg.max_iter + 1):
        largest_move = 0.0
        for j in range(x.shape[0]):
            # exact minimisation along coordinate j
            gradient_j = A[j] @ (x - y)
            updated = min(max(x[j] - gradient_j / diagonal[j], lower[j]), upper[j])
            largest_move = max(largest_move, abs(updated - x[j]))
            x[j] = updated
        if largest_move <= cfg.tol:
            logger.debug("Mahalanobis projection converged after %d sweeps", sweep)
            return x
    raise ProjectionNonConvergent(kkt_violation(x, y, A, lower, upper, cfg.tol), cfg.max_iter)


def ons_update(state: OnsState, gradient: np.ndarray, cfg: ProjectionConfig = DEFAULT_PROJECTION) -> OnsState:
    """
    One Online Newton Step update with the observed ``gradient``.

    The inverse preconditioner is kept up to date with Sherman–Morrison updates and refactorized
    every ``cfg.refactor_every`` updates.

    :raises ValueError: if the gradient is not finite
    :raises ProjectionNonConvergent: from the Mahalanobis projection
    """
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != state.w.shape:
        raise DimensionMismatch(f"gradient must have shape {state.w.shape}, was {gradient.shape}")
    if not np.all(np.isfinite(gradient)):
        raise ValueError("gradient is not finite")

    state.A_acc = state.A_acc + np.outer(gradient, gradient)
    state.updates += 1
    if state.updates % cfg.refactor_every == 0:
        state.A_inv = linalg.inv(state.A_acc, check_finite=False)
        state.A_inv = 0.5 * (state.A_inv + state.A_inv.T)
    else:
        direction = state.A_inv @ gradient
        state.A_inv = state.A_inv - np.outer(direction, direction) / (1.0 + gradient @ direction)

    y = state.w - (state.A_inv @ gradient) / state.beta
    state.w = mahalanobis_box_projection(y, state.A_acc, state.domain, cfg)
    return state


@dataclass(frozen=True)
class ExpConcaveSurrogate:
    """
    The quadratic surrogate :code:`f(x) = (√(α/2)·∇ᵀ(x − x₀) + 1/√(2α))²`.

    Its value at the anchor :code:`x₀` is :code:`1/(2α)` and its gradient there is ∇.
    Both :meth:`value` and :meth:`gradient` accept a single point or a stack of points (one per row).
    """

    grad: np.ndarray
    anchor: np.ndarray
    alpha: float

    def _inner(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.anchor) @ self.grad

    def value(self, x: np.ndarray):
        inner = self._inner(x)
        return (np.sqrt(self.alpha / 2.0) * inner + 1.0 / np.sqrt(2.0 * self.alpha)) ** 2

    def gradient(self, x: np.ndarray) -> np.ndarray:
        inner = self._inner(x)
        return np.multiply.outer(self.alpha * inner + 1.0, self.grad)


def build_expconcave_surrogate(ell_grad: np.ndarray, x_played: np.ndarray, alpha_exp: float) -> ExpConcaveSurrogate:
    """
    Surrogate of an α-exp-concave loss with gradient ``ell_grad`` at ``x_played``.

    :raises ValueError: if ``alpha_exp`` is not positive
    """
    if not alpha_exp > 0:
        raise ValueError(f"alpha_exp must be positive, was {alpha_exp}")
    ell_grad = np.asarray(ell_grad, dtype=float)
    x_played = np.asarray(x_played, dtype=float)
    if ell_grad.shape != x_played.shape:
        raise DimensionMismatch("gradient and anchor point must have the same shape")
    return ExpConcaveSurrogate(ell_grad, x_played, float(alpha_exp))
