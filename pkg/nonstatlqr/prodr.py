# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Proper nonstationary minibatch linear regression.

Each round

1. the improper learner (FLH over ONS on the enclosing box :code:`D_∞(R̃)`) proposes :code:`w_t`,
2. the learner plays the min-max projection :code:`ŵ_t ∈ D` of :code:`w_t`,
3. once :code:`b_t` is revealed, :code:`ℓ_t(w) = ‖A_t w − b_t‖² + G S_t(w)` is formed and its
   exp-concave surrogate, anchored at :code:`w_t`, drives the FLH weights and the ONS updates.

:class:`DelayedProdr` runs τ independent learners round robin so that feedback arriving τ rounds
late is still consumed by the learner that made the prediction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, List

import numpy as np

from .barrier import CovariateLike, CovariateBatch, eval_barrier, minimax_project, surrogate_loss, DEFAULT_SOLVER
from .config import SolverConfig, ProjectionConfig
from .dap_policy import DapConfig
from .domain import DecisionDomain, DapSpectralDomain
from .errors import DimensionMismatch, InvalidBounds, NonstatLqrError, RoundError
from .flh import FlhState, PrunePolicy, flh_init, flh_predict, flh_update
from .lqr_system import LqrConstants
from .ons import build_expconcave_surrogate, DEFAULT_PROJECTION

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProdrConfig:
    """
    Parameters of the proper regression learner.

    Use :func:`derive_config` (or :func:`lqr_prodr_config`) rather than filling the fields by hand.
    """

    G: float
    """Barrier weight, also a bound on the ℓ₁ norm of the loss gradients."""
    L: float
    """Scale of the exp-concavity; the surrogate uses the exp-concavity parameter 1/(4L)."""
    alpha_row: float
    sigma_b: float
    chi: float
    R_tilde: float
    gamma_param: float
    """Gradient norm bound of the exp-concave surrogates."""
    zeta: float
    """ONS regularizer (and step parameter β)."""
    eta: float
    """FLH learning rate."""
    d: int
    p: int
    tau: int = 1

    def __post_init__(self):
        for name in ("G", "L", "gamma_param", "zeta", "eta"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidBounds(f"{name} must be positive and finite, was {value}")
        if self.tau < 1:
            raise InvalidBounds(f"delay tau must be 1 or greater, was {self.tau}")

    @property
    def alpha_exp(self) -> float:
        return 1.0 / (4.0 * self.L)


def _gamma_param(G: float, L: float, alpha_row: float, R_tilde: float, d: int) -> float:
    return 2.0 * G * alpha_row * R_tilde * math.sqrt(d / (8.0 * L)) + math.sqrt(2.0 * L)


def derive_config(p: int, d: int, chi: float, sigma_b: float, alpha_row: float, R_tilde: float,
                  tau: int = 1, **overrides) -> ProdrConfig:
    """
    Derive the learner parameters from the problem bounds.

    .. code-block:: text

        G = 2pχ + 2σ          L = 6(pχ + σ)²
        γ = 2GαR̃√(d/(8L)) + √(2L)
        ζ = min{1/(16GαR̃√d), 1/(4γ²)}
        η = 1/(2γ²)

    Any of ``G``, ``L``, ``gamma_param``, ``zeta`` and ``eta`` may be given as keyword overrides;
    the quantities depending on an overridden value are derived from it.

    :param p: rows per round
    :param d: dimension of the decision vectors
    :param chi: ℓ₁ bound of the domain
    :param sigma_b: bound on :code:`‖b_t‖₁` (may be 0)
    :param alpha_row: bound on the ℓ₁ norm of the covariate rows
    :param R_tilde: half width of the enclosing box
    :param tau: feedback delay
    :raises InvalidBounds: if an input is out of range
    """
    unknown = set(overrides) - {"G", "L", "gamma_param", "zeta", "eta"}
    if unknown:
        raise TypeError(f"unknown parameters {', '.join(sorted(unknown))}")
    if int(p) < 1 or int(d) < 1:
        raise InvalidBounds(f"p and d must be 1 or greater, were {p} and {d}")
    for name, value in (("chi", chi), ("alpha_row", alpha_row), ("R_tilde", R_tilde)):
        if not (value > 0 and math.isfinite(value)):
            raise InvalidBounds(f"{name} must be positive and finite, was {value}")
    if not (sigma_b >= 0 and math.isfinite(sigma_b)):
        raise InvalidBounds(f"sigma_b must not be negative, was {sigma_b}")

    G = overrides.get("G", 2.0 * p * chi + 2.0 * sigma_b)
    L = overrides.get("L", 6.0 * (p * chi + sigma_b) ** 2)
    gamma_param = overrides.get("gamma_param", _gamma_param(G, L, alpha_row, R_tilde, d))
    zeta = overrides.get("zeta", min(1.0 / (16.0 * G * alpha_row * R_tilde * math.sqrt(d)),
                                     1.0 / (4.0 * gamma_param ** 2)))
    eta = overrides.get("eta", 1.0 / (2.0 * gamma_param ** 2))
    return ProdrConfig(G=G, L=L, alpha_row=alpha_row, sigma_b=sigma_b, chi=chi, R_tilde=R_tilde,
                       gamma_param=gamma_param, zeta=zeta, eta=eta, d=int(d), p=int(p), tau=int(tau))


def lqr_prodr_config(consts: LqrConstants, dap_cfg: DapConfig, tau: Optional[int] = None) -> ProdrConfig:
    """
    Learner parameters for the LQR regression problem with covariates from
    :func:`~nonstatlqr.lqr_pipeline.build_covariate`.

    .. code-block:: text

        α = √(m ‖Σ∞‖)
        G = 2 m d_u d_x R γ √min(d_u, d_x) ‖Λ^{1/2}U‖₁ + 2 ‖Λ^{−1/2}UBᵀ‖ ‖P∞‖ √d_u / (1 − γ∞)
        L = 4G²

    :param tau: feedback delay, defaults to ``consts.h``
    """
    spec = consts.spec
    if spec is None:
        raise ValueError("constants without a system description")
    d_u, d_x = spec.d_u, spec.d_x
    domain = DapSpectralDomain(dap_cfg, d_u, d_x)
    m, R, gamma = dap_cfg.m, dap_cfg.R, dap_cfg.gamma
    p = max(consts.effective_rank, 1)

    sigma_norm = float(np.linalg.norm(consts.Sigma_inf, ord=2))
    alpha_row = math.sqrt(m * sigma_norm) if sigma_norm > 0 else 1.0
    range_factor = consts.range_factor
    factor_norm = float(np.linalg.norm(range_factor, ord=1)) if range_factor.size else 0.0
    target_norm = 0.0
    if consts.effective_rank:
        target_norm = (float(np.linalg.norm(consts.inverse_range_factor @ spec.B.T, ord=2))
                       * float(np.linalg.norm(consts.P_inf, ord=2)) * math.sqrt(d_u) / (1.0 - consts.gamma_inf))
    G = 2.0 * m * d_u * d_x * R * gamma * math.sqrt(min(d_u, d_x)) * factor_norm + 2.0 * target_norm
    if G <= 0:
        G = 1.0
    L = 4.0 * G ** 2
    return derive_config(p=p, d=domain.dim, chi=domain.chi, sigma_b=target_norm, alpha_row=alpha_row,
                         R_tilde=domain.R_tilde, tau=consts.h if tau is None else tau, G=G, L=L)


@dataclass
class RoundDiagnostics:
    """Intermediate quantities of one round."""

    round: int
    w: np.ndarray
    """Prediction of the improper learner."""
    w_hat: np.ndarray
    """Played (proper) prediction."""
    barrier: float
    """:code:`S_t(w_t)`"""
    active_learners: int
    weight_entropy: float
    loss: Optional[float] = None
    """:code:`ℓ_t(w_t)`, known once the round's feedback has been consumed."""


@dataclass
class _Pending:
    round: int
    A: np.ndarray
    w: np.ndarray
    predictions: np.ndarray
    diagnostics: RoundDiagnostics


def _covariates(A_t: CovariateLike) -> np.ndarray:
    return A_t.A if isinstance(A_t, CovariateBatch) else np.atleast_2d(np.asarray(A_t, dtype=float))


class ProdrState:
    """
    One proper regression learner.

    The learner alternates :meth:`predict` and :meth:`update`; :func:`prodr_round` does both for
    a round whose targets are known immediately.

    :param config: learner parameters
    :param domain: the feasible set D of the played predictions
    :param solver_cfg: settings of the min-max projection
    :param projection_cfg: settings of the ONS projection
    :param prune: FLH pruning policy
    """

    def __init__(self, config: ProdrConfig, domain: DecisionDomain, solver_cfg: SolverConfig = DEFAULT_SOLVER,
                 projection_cfg: ProjectionConfig = DEFAULT_PROJECTION, prune: PrunePolicy = PrunePolicy.NONE):
        if domain.dim != config.d:
            raise DimensionMismatch(f"domain has dimension {domain.dim}, configuration expects {config.d}")
        self.config = config
        self.domain = domain
        self.solver_cfg = solver_cfg
        self.flh: FlhState = flh_init(config.d, config.eta, config.zeta, domain.enclosing_box(),
                                      PrunePolicy(prune), projection_cfg)
        self.round = 0
        self._pending: Optional[_Pending] = None

    @property
    def awaiting_feedback(self) -> bool:
        return self._pending is not None

    def predict(self, A_t: CovariateLike) -> Tuple[np.ndarray, RoundDiagnostics]:
        """
        Play the next round.

        :param A_t: this round's covariates
        :return: the proper prediction :code:`ŵ_t ∈ D` and the round diagnostics
        :raises RoundError: wrapping solver errors
        """
        if self._pending is not None:
            raise RuntimeError(f"round {self._pending.round} still awaits its feedback")
        self.round += 1
        A = _covariates(A_t)
        try:
            predictions = self.flh.predictions()
            w = flh_predict(self.flh, predictions)
            w_hat = minimax_project(A, w, self.domain, self.solver_cfg)
            barrier = eval_barrier(A, w, self.domain, self.solver_cfg)
        except RoundError:
            raise
        except NonstatLqrError as err:
            raise RoundError(self.round, err) from err
        diagnostics = RoundDiagnostics(round=self.round, w=w, w_hat=w_hat, barrier=barrier,
                                       active_learners=self.flh.active_learners,
                                       weight_entropy=self.flh.weight_entropy())
        self._pending = _Pending(self.round, A, w, predictions, diagnostics)
        return w_hat, diagnostics

    def update(self, A_t: CovariateLike, b_t: np.ndarray) -> float:
        """
        Consume the feedback of the round predicted last.

        :param A_t: the covariates of that round
        :param b_t: its targets
        :return: :code:`ℓ_t(w_t)`
        """
        if self._pending is None:
            raise RuntimeError("update without a preceding prediction")
        pending = self._pending
        A = _covariates(A_t)
        if A.shape != pending.A.shape:
            raise DimensionMismatch(f"feedback covariates of shape {A.shape} do not match round "
                                    f"{pending.round} ({pending.A.shape})")
        try:
            value, gradient = surrogate_loss(A, b_t, pending.w, self.domain, self.config.G, self.solver_cfg)
            surrogate = build_expconcave_surrogate(gradient, pending.w, self.config.alpha_exp)
            flh_update(self.flh, surrogate.value(pending.predictions), surrogate.gradient(pending.predictions))
        except RoundError:
            raise
        except NonstatLqrError as err:
            raise RoundError(pending.round, err) from err
        pending.diagnostics.loss = value
        self._pending = None
        return value


def prodr_init(config: ProdrConfig, domain: DecisionDomain, **kwargs) -> ProdrState:
    return ProdrState(config, domain, **kwargs)


def prodr_round(state: ProdrState, A_t: CovariateLike, b_t: np.ndarray) -> Tuple[np.ndarray, RoundDiagnostics]:
    """
    A full round with immediate feedback: predict, then learn from :code:`(A_t, b_t)`.

    :return: the played :code:`ŵ_t ∈ D` and the diagnostics (with :code:`ℓ_t(w_t)` filled in)
    """
    w_hat, diagnostics = state.predict(A_t)
    state.update(A_t, b_t)
    return w_hat, diagnostics


class DelayedProdr:
    """
    τ learners served round robin: round t belongs to learner :code:`(t − 1) mod τ`.

    At round t that learner first consumes the feedback of round :code:`t − τ` (its own previous
    round), then predicts for round t.
    """

    def __init__(self, config: ProdrConfig, domain: DecisionDomain, tau: Optional[int] = None, **kwargs):
        tau = config.tau if tau is None else int(tau)
        if tau < 1:
            raise InvalidBounds(f"delay tau must be 1 or greater, was {tau}")
        self.tau = tau
        self.config = replace(config, tau=tau)
        self.domain = domain
        self.instances: List[ProdrState] = [ProdrState(self.config, domain, **kwargs) for _ in range(tau)]
        self.t = 0

    def instance_for(self, t: int) -> int:
        return (t - 1) % self.tau

    def round(self, t: int, A_t: CovariateLike,
              delayed_loss: Optional[Tuple[CovariateLike, np.ndarray]] = None) -> Tuple[np.ndarray, RoundDiagnostics]:
        """
        Play round ``t``.

        :param t: round index, must be one more than the previous call
        :param A_t: covariates of round t
        :param delayed_loss: :code:`(A_{t−τ}, b_{t−τ})`, required exactly when :code:`t > τ`
        """
        if t != self.t + 1:
            raise ValueError(f"expected round {self.t + 1}, got {t}")
        if t > self.tau and delayed_loss is None:
            raise ValueError(f"round {t} needs the feedback of round {t - self.tau}")
        if t <= self.tau and delayed_loss is not None:
            raise ValueError(f"no feedback exists for round {t - self.tau}")
        instance = self.instances[self.instance_for(t)]
        if delayed_loss is not None:
            instance.update(*delayed_loss)
        w_hat, diagnostics = instance.predict(A_t)
        self.t = t
        diagnostics.round = t
        return w_hat, diagnostics


def delayed_round(states: DelayedProdr, t: int, A_t: CovariateLike,
                  delayed_loss: Optional[Tuple[CovariateLike, np.ndarray]] = None) -> np.ndarray:
    """Play round ``t`` of a :class:`DelayedProdr` and return the played vector."""
    w_hat, _ = states.round(t, A_t, delayed_loss)
    return w_hat
