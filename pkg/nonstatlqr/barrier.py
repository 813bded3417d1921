# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
The min-max barrier and the surrogate loss of the proper regression learner.

For a covariate matrix A_t with rows :code:`a_{t,i}` and a domain D the barrier is

.. code-block:: text

    S_t(w) = min_{x∈D} max_i |a_{t,i}ᵀ(x − w)| = max_i min_{x∈D} |a_{t,i}ᵀ(x − w)|

The second form reduces to p scalar problems: the range of :code:`aᵀx` over D is
:code:`[−h_D(a), h_D(a)]`, so the inner minimum is the distance of :code:`aᵀw` to that interval.

The surrogate loss fed to the improper learner is :code:`ℓ_t(w) = ‖A_t w − b_t‖² + G S_t(w)`.
It coincides with the squared loss on D and dominates the squared loss of the min-max projection.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import cvxpy as cp
from scipy.optimize import linprog

from .config import SolverConfig
from .domain import DecisionDomain, BoxDomain, DapSpectralDomain
from .errors import DimensionMismatch, InvalidBounds, SolverNonConvergent

logger = logging.getLogger(__name__)

DEFAULT_SOLVER = SolverConfig()

ROW_TOL = 1e-9


@dataclass(frozen=True)
class CovariateBatch:
    """
    One round of regression data.

    :param A: p × d covariate matrix
    :param b: targets, length p
    :param alpha_row: optional bound on the ℓ₁ norm of every row of A
    :param sigma_b: optional bound on :code:`‖b‖₁`
    :raises InvalidBounds: if one of the optional bounds is violated
    """

    A: np.ndarray
    b: np.ndarray
    alpha_row: Optional[float] = None
    sigma_b: Optional[float] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] == 0:
            raise DimensionMismatch("covariate matrix has no rows")
        if b.shape != (A.shape[0],):
            raise DimensionMismatch(f"targets must have shape ({A.shape[0]},), was {b.shape}")
        if self.alpha_row is not None:
            largest = float(np.abs(A).sum(axis=1).max())
            if largest > self.alpha_row + ROW_TOL:
                raise InvalidBounds(f"row ℓ1 norm {largest:.6g} exceeds alpha_row={self.alpha_row}")
        if self.sigma_b is not None:
            total = float(np.abs(b).sum())
            if total > self.sigma_b + ROW_TOL:
                raise InvalidBounds(f"‖b‖₁ = {total:.6g} exceeds sigma_b={self.sigma_b}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]


CovariateLike = Union[np.ndarray, CovariateBatch]


def _rows(A_t: CovariateLike, domain: DecisionDomain) -> np.ndarray:
    A = A_t.A if isinstance(A_t, CovariateBatch) else np.atleast_2d(np.asarray(A_t, dtype=float))
    if A.shape[0] == 0:
        raise DimensionMismatch("covariate matrix has no rows")
    if A.shape[1] != domain.dim:
        raise DimensionMismatch(f"covariate matrix has {A.shape[1]} columns, domain has dimension {domain.dim}")
    return A


def row_distances(A: np.ndarray, w: np.ndarray, domain: DecisionDomain) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per row i: the distance of :code:`a_iᵀw` to the range :code:`[−h_D(a_i), h_D(a_i)]`.

    :return: (distances, values :code:`a_iᵀw`, support values :code:`h_D(a_i)`)
    """
    values = A @ w
    supports = np.array([domain.support(row) for row in A])
    return np.maximum(np.abs(values) - supports, 0.0), values, supports


def eval_barrier(A_t: CovariateLike, w: np.ndarray, domain: DecisionDomain,
                 solver_cfg: SolverConfig = DEFAULT_SOLVER) -> float:
    """
    Evaluate the min-max barrier :code:`S_t(w)`.

    The value is computed in closed form from the support function of the domain, so
    ``solver_cfg`` only matters for :func:`minimax_project`.

    :param A_t: covariate matrix (or batch)
    :param w: point of evaluation
    :param domain: the feasible set D
    :param solver_cfg: solver settings
    :return: :code:`S_t(w) ≥ 0`
    """
    A = _rows(A_t, domain)
    w = domain.check_vector(w, "w")
    distances, _, _ = row_distances(A, w, domain)
    return float(distances.max())


def barrier_subgradient(A_t: CovariateLike, w: np.ndarray, domain: DecisionDomain,
                        solver_cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    """
    A subgradient of :code:`S_t` at ``w``.

    The returned vector is :code:`+a_{i*}`, :code:`−a_{i*}` or 0, where :code:`i*` is the first row
    attaining the outer maximum. With :code:`s = a_{i*}ᵀ(Π(w) − w)`, where Π(w) is the point of the
    range of :code:`a_{i*}ᵀx` closest to :code:`a_{i*}ᵀw`, the result is :code:`+a_{i*}` for
    :code:`s < 0`, :code:`−a_{i*}` for :code:`s > 0` and 0 when :code:`|s| ≤ zero_tol`.
    """
    A = _rows(A_t, domain)
    w = domain.check_vector(w, "w")
    distances, values, supports = row_distances(A, w, domain)
    i_star = int(np.argmax(distances))
    if distances[i_star] <= solver_cfg.zero_tol:
        return np.zeros(domain.dim)
    projected = np.clip(values[i_star], -supports[i_star], supports[i_star])
    s = projected - values[i_star]
    if s < -solver_cfg.zero_tol:
        return A[i_star].copy()
    if s > solver_cfg.zero_tol:
        return -A[i_star]
    return np.zeros(domain.dim)


def minimax_objective(A: np.ndarray, x: np.ndarray, w: np.ndarray) -> float:
    return float(np.abs(A @ (x - w)).max())


def _single_row_project(a: np.ndarray, w: np.ndarray, start: np.ndarray, domain: DecisionDomain) -> np.ndarray:
    # the optimum moves a single scalar a^T x onto clip(a^T w); slide from start to an extreme point
    target = float(np.clip(a @ w, -domain.support(a), domain.support(a)))
    current = float(a @ start)
    if current == target:
        return start
    extreme = domain.support_point(a if target > current else -a)
    reach = float(a @ extreme) - current
    if reach == 0.0:
        return start
    fraction = min(max((target - current) / reach, 0.0), 1.0)
    return domain.project(start + fraction * (extreme - start))


def _box_project(A: np.ndarray, w: np.ndarray, domain: BoxDomain) -> Tuple[Optional[np.ndarray], float]:
    # min t  s.t.  |A(x - w)| <= t,  -r <= x <= r
    p, d = A.shape
    cost = np.zeros(d + 1)
    cost[-1] = 1.0
    ones = -np.ones((p, 1))
    A_ub = np.vstack([np.hstack([A, ones]), np.hstack([-A, ones])])
    b_ub = np.concatenate([A @ w, -(A @ w)])
    bounds = [(-r, r) for r in domain.radius] + [(0, None)]
    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not result.success:
        logger.debug("linear program failed: %s", result.message)
        return None, 0.0
    return domain.project(result.x[:d]), float(result.fun)


def solve_conic(problem: cp.Problem) -> bool:
    """Solve with Clarabel when installed; True if cvxpy reports an optimal status."""
    try:
        if cp.CLARABEL in cp.installed_solvers():
            problem.solve(solver=cp.CLARABEL)
        else:
            problem.solve()
    except cp.error.SolverError as err:
        logger.debug("conic solver failed: %s", err)
        return False
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        logger.debug("conic solver status %s", problem.status)
        return False
    return True


def _spectral_project(A: np.ndarray, w: np.ndarray, domain: DapSpectralDomain
                      ) -> Tuple[Optional[np.ndarray], float]:
    # min t  s.t.  |A(z - w)| <= t,  sigma_max(M_i) <= R gamma^(i-1)
    z = cp.Variable(domain.dim)
    t = cp.Variable()
    problem = cp.Problem(cp.Minimize(t), [cp.abs(A @ z - A @ w) <= t] + domain.constraints(z))
    if not solve_conic(problem) or z.value is None:
        return None, 0.0
    return domain.project(np.asarray(z.value).reshape(-1)), float(problem.value)


def _subgradient_project(A: np.ndarray, w: np.ndarray, start: np.ndarray, target: float,
                         domain: DecisionDomain, solver_cfg: SolverConfig) -> Tuple[np.ndarray, float]:
    """Projected subgradient descent, steps c·R̃/(√k‖g‖) capped by the Polyak step towards ``target``."""
    best = start
    best_value = minimax_objective(A, start, w)
    x = start
    scale = solver_cfg.step * domain.R_tilde
    for k in range(1, solver_cfg.max_iter + 1):
        residuals = A @ (x - w)
        i_star = int(np.argmax(np.abs(residuals)))
        value = abs(float(residuals[i_star]))
        if value < best_value:
            best, best_value = x, value
        if best_value <= target + solver_cfg.tol:
            break
        g = math.copysign(1.0, residuals[i_star]) * A[i_star]
        norm_sq = float(g @ g)
        if norm_sq == 0.0:
            break
        step = scale / (math.sqrt(k) * math.sqrt(norm_sq))
        if value > target:
            step = min(step, (value - target) / norm_sq)
        x = domain.project(x - step * g)
    return best, best_value


def minimax_project(A_t: CovariateLike, w_t: np.ndarray, domain: DecisionDomain,
                    solver_cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    """
    The proper prediction :code:`ŵ_t ∈ argmin_{x∈D} max_i |a_{t,i}ᵀ(x − w_t)|`.

    The search starts at the Euclidean projection of ``w_t`` which is returned whenever it is already
    optimal (in particular ``w_t`` itself if it lies in D). A single row is solved exactly by sliding
    towards an extreme point of D. Several rows are solved as a linear program over a box and as a
    conic program over a DAP domain, followed by projected subgradient descent if the result is not
    yet within ``tol`` of the optimal value.

    With several rows the optimal value may exceed :code:`S_t(w_t)`, which is only a lower bound
    then; the lower bound used for the termination test is the larger of the two values.

    :raises SolverNonConvergent: if the objective is not within :code:`10·tol` of the lower bound
        after the iteration budget
    """
    A = _rows(A_t, domain)
    w_t = domain.check_vector(w_t, "w_t")
    lower = eval_barrier(A, w_t, domain, solver_cfg)
    start = domain.project(w_t)
    value = minimax_objective(A, start, w_t)
    if value <= lower + solver_cfg.tol:
        return start

    candidate: Optional[np.ndarray] = None
    if A.shape[0] == 1:
        candidate = _single_row_project(A[0], w_t, start, domain)
    elif isinstance(domain, BoxDomain):
        candidate, optimum = _box_project(A, w_t, domain)
        lower = max(lower, optimum)
    elif isinstance(domain, DapSpectralDomain):
        candidate, optimum = _spectral_project(A, w_t, domain)
        lower = max(lower, optimum)
    if candidate is not None:
        value = minimax_objective(A, candidate, w_t)
        if value <= lower + solver_cfg.tol:
            return candidate
        start = candidate

    best, value = _subgradient_project(A, w_t, start, lower, domain, solver_cfg)
    gap = value - lower
    if gap <= solver_cfg.tol:
        return best
    if gap <= 10 * solver_cfg.tol:
        logger.warning("min-max projection budget exhausted, gap %.3e accepted", gap)
        return best
    raise SolverNonConvergent(value, gap)


def squared_loss(A: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    """:code:`f_t(w) = ‖A w − b‖₂²`."""
    residual = A @ w - b
    return float(residual @ residual)


def surrogate_loss(A_t: CovariateLike, b_t: np.ndarray, w: np.ndarray, domain: DecisionDomain, G: float,
                   solver_cfg: SolverConfig = DEFAULT_SOLVER) -> Tuple[float, np.ndarray]:
    """
    Value and subgradient of :code:`ℓ_t(w) = ‖A_t w − b_t‖² + G S_t(w)`.

    :param G: barrier weight, must dominate :code:`‖A_t(w₁ + w₂) − 2b_t‖₁` over the enclosing box
    :return: (value, subgradient)
    """
    if G < 0:
        raise ValueError(f"barrier weight G must not be negative, was {G}")
    A = _rows(A_t, domain)
    b_t = np.atleast_1d(np.asarray(b_t, dtype=float))
    if b_t.shape != (A.shape[0],):
        raise DimensionMismatch(f"targets must have shape ({A.shape[0]},), was {b_t.shape}")
    w = domain.check_vector(w, "w")
    residual = A @ w - b_t
    value = float(residual @ residual) + G * eval_barrier(A, w, domain, solver_cfg)
    gradient = 2.0 * A.T @ residual + G * barrier_subgradient(A, w, domain, solver_cfg)
    return value, gradient
