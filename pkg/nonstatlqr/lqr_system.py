# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
System-derived constants of a linear quadratic regulator.

The module turns a :class:`SystemSpec` ``(A, B, R_x, R_u)`` into the quantities the learning
controller needs:

* the infinite horizon Lyapunov matrix P∞, obtained by iterating the Riccati recursion
  :code:`P ← AᵀPA + R_x − AᵀPB(R_u + BᵀPB)⁻¹BᵀPA` from :code:`P₀ = R_x`,
* the optimal gain K∞, the steady state cost matrix Σ∞ = R_u + BᵀP∞B and the closed loop A − BK∞,
* the spectral factors of Σ∞ on its effective range,
* the stability constants γ∞, κ∞, β*, Ψ*, Γ* that determine the feedback delay h,
* the truncated feedforward target q∞;h of a window of future disturbances.

Rank deficient matrices (for example R_u = 0) are handled with pseudo-inverse semantics on the
effective range, so the two-dimensional lower bound system of :func:`lower_bound_system` is accepted.

All functions are pure and may be called concurrently.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence, Tuple, Union, Optional, Dict, Any

import numpy as np
from scipy import linalg

from .config import LqrTolerances
from .errors import NonConvergent, SingularInnerMatrix, UnstableSystem, DimensionMismatch

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCES = LqrTolerances()
POLISH_STEPS = 200


def _as_matrix(value: Any, name: str) -> np.ndarray:
    matrix = np.array(value, dtype=float)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got an array with {matrix.ndim} dimensions")
    return matrix


@dataclass(frozen=True)
class SystemSpec:
    """
    A linear system :code:`x_{t+1} = A x_t + B u_t + w_t` with loss :code:`xᵀR_x x + uᵀR_u u`.

    Scalars are accepted for one-dimensional systems and promoted to 1×1 matrices.

    :param A: state matrix, d_x × d_x
    :param B: input matrix, d_x × d_u
    :param R_x: symmetric PSD state cost, d_x × d_x
    :param R_u: symmetric PSD control cost, d_u × d_u
    :param n: horizon (number of rounds), used for the feedback delay h
    :raises DimensionMismatch: if the shapes do not fit together
    :raises ValueError: if a cost matrix is not symmetric PSD or the horizon is not positive
    """

    A: np.ndarray
    B: np.ndarray
    R_x: np.ndarray
    R_u: np.ndarray
    n: int = 1
    tol_psd: float = field(default=DEFAULT_TOLERANCES.tol_psd, repr=False)

    def __post_init__(self):
        for name in ("A", "B", "R_x", "R_u"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), name))

        d_x = self.A.shape[0]
        if self.A.shape != (d_x, d_x):
            raise DimensionMismatch(f"A must be square, was {self.A.shape}")
        if self.B.shape[0] != d_x:
            raise DimensionMismatch(f"B must have {d_x} rows, was {self.B.shape}")
        d_u = self.B.shape[1]
        if self.R_x.shape != (d_x, d_x):
            raise DimensionMismatch(f"R_x must be {d_x}x{d_x}, was {self.R_x.shape}")
        if self.R_u.shape != (d_u, d_u):
            raise DimensionMismatch(f"R_u must be {d_u}x{d_u}, was {self.R_u.shape}")

        for name in ("R_x", "R_u"):
            matrix = getattr(self, name)
            if not np.allclose(matrix, matrix.T, atol=self.tol_psd):
                raise ValueError(f"{name} is not symmetric")
            smallest = float(np.min(linalg.eigvalsh(matrix)))
            if smallest < -self.tol_psd:
                raise ValueError(f"{name} is not positive semi-definite (eigenvalue {smallest:.3e})")

        if int(self.n) < 1:
            raise ValueError(f"horizon n must be 1 or greater, was {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def d_x(self) -> int:
        return self.A.shape[0]

    @property
    def d_u(self) -> int:
        return self.B.shape[1]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SystemSpec:
        """
        Build a spec from a dictionary with row-major nested lists.

        Required keys are :code:`A`, :code:`B`, :code:`R_x` and :code:`R_u`; :code:`n` is optional.
        """
        missing = [key for key in ("A", "B", "R_x", "R_u") if key not in data]
        if missing:
            raise ValueError(f"system description lacks {', '.join(missing)}")
        unknown = sorted(set(data) - {"A", "B", "R_x", "R_u", "n"})
        if unknown:
            raise ValueError(f"unknown keys in system description: {', '.join(unknown)}")
        return cls(A=data["A"], B=data["B"], R_x=data["R_x"], R_u=data["R_u"], n=data.get("n", 1))

    def to_dict(self) -> Dict[str, Any]:
        return {"A": self.A.tolist(), "B": self.B.tolist(), "R_x": self.R_x.tolist(),
                "R_u": self.R_u.tolist(), "n": self.n}


@dataclass(frozen=True)
class LqrConstants:
    """
    Everything derived from a :class:`SystemSpec`.

    Instances are normally produced by :func:`system_constants`; the constructor is public so that
    tests and callers can inject constants directly (e.g. for :func:`compute_delay_h`).
    """

    spec: Optional[SystemSpec]
    P_inf: np.ndarray
    K_inf: np.ndarray
    Sigma_inf: np.ndarray
    U_inf: np.ndarray
    """Rows are the eigenvectors of Σ∞, so that Σ∞ = Uᵀ Λ U."""
    Lambda_inf: np.ndarray
    """Diagonal matrix of the eigenvalues of Σ∞, sorted descending, small values clamped to 0."""
    A_cl: np.ndarray
    effective_rank: int
    gamma_inf: float
    kappa_inf: float
    beta_star: float
    Psi_star: float
    Gamma_star: float
    h: int = 1

    @property
    def range_factor(self) -> np.ndarray:
        """Λ^{1/2}U restricted to the effective range of Σ∞ (effective_rank × d_u)."""
        r = self.effective_rank
        return np.sqrt(np.diag(self.Lambda_inf)[:r])[:, None] * self.U_inf[:r]

    @property
    def inverse_range_factor(self) -> np.ndarray:
        """Λ^{-1/2}U restricted to the effective range of Σ∞."""
        r = self.effective_rank
        return (1.0 / np.sqrt(np.diag(self.Lambda_inf)[:r]))[:, None] * self.U_inf[:r]

    @property
    def Sigma_pinv(self) -> np.ndarray:
        """Pseudo-inverse of Σ∞ on its effective range."""
        inv = self.inverse_range_factor
        return inv.T @ inv


def _range_solve(matrix: np.ndarray, rhs: np.ndarray, rank_tol: float, cond_limit: float) -> np.ndarray:
    """
    Solve :code:`matrix · X = rhs` for a symmetric PSD matrix on its range.

    :raises SingularInnerMatrix: if the right hand side has a component outside the range of the
        matrix or the matrix is not finite.
    """
    if not np.all(np.isfinite(matrix)):
        raise SingularInnerMatrix("R_u + BᵀPB is not finite")
    values, vectors = linalg.eigh(matrix)
    scale = max(1.0, float(np.max(np.abs(values))))
    keep = values > max(rank_tol, scale / cond_limit)
    if np.all(keep):
        return linalg.solve(matrix, rhs, assume_a="pos")
    basis = vectors[:, keep]
    solution = basis @ ((basis.T @ rhs) / values[keep][:, None])
    outside = rhs - basis @ (basis.T @ rhs)
    if np.linalg.norm(outside) > 1e-8 * max(1.0, float(np.linalg.norm(rhs))):
        raise SingularInnerMatrix(
            f"R_u + BᵀPB is singular (smallest eigenvalue {values[0]:.3e}) and BᵀPA leaves its range")
    return solution


def riccati_map(spec: SystemSpec, P: np.ndarray,
                tolerances: LqrTolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """One application of the Riccati recursion to ``P``."""
    A, B = spec.A, spec.B
    inner = spec.R_u + B.T @ P @ B
    gain = _range_solve(inner, B.T @ P @ A, tolerances.rank_tol, tolerances.inner_cond_limit)
    result = A.T @ P @ A + spec.R_x - A.T @ P @ B @ gain
    return 0.5 * (result + result.T)


def solve_dare(spec: SystemSpec, tol: float = DEFAULT_TOLERANCES.tol_dare,
               max_iter: int = DEFAULT_TOLERANCES.max_iter,
               tolerances: LqrTolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Solve the discrete algebraic Riccati equation by fixed point iteration.

    Starting from :code:`P₀ = R_x` the recursion is applied, symmetrising after each step,
    until the operator norm of :code:`P − Riccati(P)` is at most ``tol``.

    :param spec: the system
    :param tol: accepted residual in operator norm
    :param max_iter: iteration budget
    :param tolerances: rank thresholds for the pseudo-inverse of R_u + BᵀPB
    :return: the symmetric PSD fixed point P∞
    :raises NonConvergent: if the residual is still above ``tol`` after ``max_iter`` iterations
    :raises SingularInnerMatrix: if R_u + BᵀPB cannot be inverted on the required range
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, was {tol}")

    P = spec.R_x.copy()
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        P_next = riccati_map(spec, P, tolerances)
        residual = float(np.linalg.norm(P_next - P, ord=2))
        if not math.isfinite(residual):
            break
        if residual <= tol:
            # keep iterating while the residual still shrinks, the returned P stays certified
            for _ in range(POLISH_STEPS):
                if residual == 0.0:
                    break
                P_after = riccati_map(spec, P_next, tolerances)
                polished = float(np.linalg.norm(P_after - P_next, ord=2))
                if polished >= residual:
                    break
                P, P_next, residual = P_next, P_after, polished
            logger.debug("Riccati iteration converged after %d steps (residual %.3e)", iteration, residual)
            return P
        P = P_next

    raise NonConvergent(residual, max_iter)


def compute_controller(spec: SystemSpec, P_inf: np.ndarray,
                       tolerances: LqrTolerances = DEFAULT_TOLERANCES
                       ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Optimal state feedback for a given Lyapunov matrix.

    :return: :code:`(K∞, Σ∞, A_cl)` with K∞ = (R_u + BᵀPB)⁻¹BᵀPA, Σ∞ = R_u + BᵀPB and
        A_cl = A − B·K∞. The inverse is taken on the range of Σ∞.
    :raises SingularInnerMatrix: as :func:`solve_dare`
    """
    A, B = spec.A, spec.B
    sigma = spec.R_u + B.T @ P_inf @ B
    sigma = 0.5 * (sigma + sigma.T)
    K = _range_solve(sigma, B.T @ P_inf @ A, tolerances.rank_tol, tolerances.inner_cond_limit)
    return K, sigma, A - B @ K


def spectral_sigma(Sigma_inf: np.ndarray, rank_tol: float = DEFAULT_TOLERANCES.rank_tol
                   ) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Spectral decomposition :code:`Σ = Uᵀ Λ U` with eigenvalues sorted descending.

    Eigenvalues below ``rank_tol`` (including slightly negative ones) are set to exactly 0 and
    lie outside the effective range.

    :return: :code:`(U, Λ, effective_rank)`; the first ``effective_rank`` rows of U span the range.
    """
    sym = 0.5 * (Sigma_inf + Sigma_inf.T)
    values, vectors = linalg.eigh(sym)
    order = np.argsort(values)[::-1]
    values = values[order]
    vectors = vectors[:, order]
    values = np.where(values < rank_tol, 0.0, values)
    rank = int(np.count_nonzero(values))
    return vectors.T.copy(), np.diag(values), rank


def spectral_radius(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(linalg.eigvals(matrix))))


def _smallest_positive_eigenvalue(matrix: np.ndarray, rank_tol: float) -> Optional[float]:
    values = linalg.eigvalsh(matrix)
    positive = values[values > rank_tol]
    return float(positive.min()) if positive.size else None


def stability_constants(spec: SystemSpec, P_inf: np.ndarray,
                        tolerances: LqrTolerances = DEFAULT_TOLERANCES
                        ) -> Tuple[float, float, float, float, float]:
    """
    The constants entering the feedback delay h.

    γ∞ = ‖I − P^{-1/2} R_x P^{-1/2}‖^{1/2} and κ∞ = ‖P^{1/2}‖·‖P^{-1/2}‖ are evaluated on the
    effective range of P∞. β* uses the smallest positive eigenvalues of R_u and R_x.

    :return: :code:`(γ∞, κ∞, β*, Ψ*, Γ*)`
    """
    values, vectors = linalg.eigh(0.5 * (P_inf + P_inf.T))
    keep = values > tolerances.rank_tol
    if np.any(keep):
        basis = vectors[:, keep]
        inv_sqrt = basis @ np.diag(values[keep] ** -0.5) @ basis.T
        projector = basis @ basis.T
        gamma_sq = float(np.linalg.norm(projector - inv_sqrt @ spec.R_x @ inv_sqrt, ord=2))
        gamma_inf = math.sqrt(max(gamma_sq, 0.0))
        kappa_inf = math.sqrt(float(values[keep].max() / values[keep].min()))
    else:
        gamma_inf = 0.0
        kappa_inf = 1.0

    beta_star = 1.0
    for matrix in (spec.R_u, spec.R_x):
        smallest = _smallest_positive_eigenvalue(matrix, tolerances.rank_tol)
        if smallest is not None:
            beta_star = max(beta_star, 1.0 / smallest)

    psi_star = max(1.0, *(float(np.linalg.norm(m, ord=2)) for m in (spec.A, spec.B, spec.R_x, spec.R_u)))
    gamma_star = max(1.0, float(np.linalg.norm(P_inf, ord=2)))
    return gamma_inf, kappa_inf, beta_star, psi_star, gamma_star


def compute_delay_h(consts: LqrConstants, n: int) -> int:
    """
    Feedback delay :code:`h = ⌈2(1−γ∞)⁻¹ log(κ∞² β*² Ψ* Γ*² n²)⌉`, at least 1.

    :raises UnstableSystem: if γ∞ ≥ 1
    """
    if n < 1:
        raise ValueError(f"n must be 1 or greater, was {n}")
    if consts.gamma_inf >= 1.0:
        raise UnstableSystem(f"γ∞ = {consts.gamma_inf:.6f} is not below 1")
    argument = (consts.kappa_inf ** 2 * consts.beta_star ** 2 * consts.Psi_star
                * consts.Gamma_star ** 2 * float(n) ** 2)
    h = math.ceil(2.0 / (1.0 - consts.gamma_inf) * math.log(argument))
    return max(1, h)


def compute_q_inf(consts: LqrConstants, disturbances: Sequence[np.ndarray]) -> np.ndarray:
    """
    Truncated feedforward target :code:`q = Σ∞⁺ Σ_j Bᵀ A_cl^{j−1} P∞ w_j`.

    ``disturbances[0]`` is the disturbance landing in the next state and receives the exponent 0.
    The pseudo-inverse of Σ∞ acts on its effective range.

    :param consts: system constants, must carry the :class:`SystemSpec`
    :param disturbances: the window of h future disturbances (each of length d_x)
    :return: vector of length d_u
    """
    if consts.spec is None:
        raise ValueError("constants without a system spec cannot build the feedforward target")
    d_x = consts.spec.d_x
    accumulated = np.zeros(d_x)
    # Horner scheme, last disturbance gets the highest power
    for w in reversed(list(disturbances)):
        w = np.asarray(w, dtype=float)
        if w.shape != (d_x,):
            raise DimensionMismatch(f"disturbance must have shape ({d_x},), was {w.shape}")
        accumulated = consts.A_cl @ accumulated + consts.P_inf @ w
    return consts.Sigma_pinv @ (consts.spec.B.T @ accumulated)


def system_constants(spec: SystemSpec, tolerances: LqrTolerances = DEFAULT_TOLERANCES,
                     h_cap: Optional[int] = None) -> LqrConstants:
    """
    Compute all constants of a system in one call.

    :param spec: the system
    :param tolerances: solver settings
    :param h_cap: optional upper limit for the feedback delay. A warning is logged if the formula
        value is larger.
    :raises UnstableSystem: if the closed loop is not stable
    """
    P = solve_dare(spec, tolerances.tol_dare, tolerances.max_iter, tolerances)
    K, sigma, A_cl = compute_controller(spec, P, tolerances)
    rho = spectral_radius(A_cl)
    if rho >= 1.0 - tolerances.rho_tol:
        raise UnstableSystem(f"spectral radius of A − BK∞ is {rho:.6f}")
    U, Lambda, rank = spectral_sigma(sigma, tolerances.rank_tol)
    gamma_inf, kappa_inf, beta_star, psi_star, gamma_star = stability_constants(spec, P, tolerances)

    consts = LqrConstants(spec=spec, P_inf=P, K_inf=K, Sigma_inf=sigma, U_inf=U, Lambda_inf=Lambda,
                          A_cl=A_cl, effective_rank=rank, gamma_inf=gamma_inf, kappa_inf=kappa_inf,
                          beta_star=beta_star, Psi_star=psi_star, Gamma_star=gamma_star)
    h = compute_delay_h(consts, spec.n)
    if h_cap is not None and h > h_cap:
        logger.warning("feedback delay h = %d exceeds the cap, using h = %d", h, h_cap)
        h = h_cap
    return replace(consts, h=int(h))


def default_h_cap(d_x: int) -> int:
    return 10 * d_x + 50


def lqr_loss(spec: SystemSpec, x: np.ndarray, u: np.ndarray) -> float:
    """Quadratic loss :code:`xᵀR_x x + uᵀR_u u`."""
    return float(x @ spec.R_x @ x + u @ spec.R_u @ u)


def lower_bound_system(n: int = 1) -> SystemSpec:
    """
    The two-dimensional system of the dynamic regret lower bound.

    A = 0, B = −I, R_x = diag(1, 0), R_u = 0. Its Σ∞ is singular, K∞ = 0 and A_cl = 0.
    """
    return SystemSpec(A=np.zeros((2, 2)), B=-np.eye(2), R_x=np.diag([1.0, 0.0]),
                      R_u=np.zeros((2, 2)), n=n)


def load_system_spec(path: Union[str, Path]) -> SystemSpec:
    """Read a :class:`SystemSpec` from a JSON file (see :meth:`SystemSpec.from_dict`)."""
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    if "system" in data:
        data = data["system"]
    return SystemSpec.from_dict(data)
