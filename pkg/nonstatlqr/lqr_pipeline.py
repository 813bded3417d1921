# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
LQR control as delayed proper regression.

At round t the learner predicts :code:`z_t = flatten(M_t)` from the covariates

.. code-block:: text

    A_t = [w_{t−1}ᵀ … w_{t−m}ᵀ] ⊗ (Λ^{1/2}U)        so that  A_t flatten(M) = Λ^{1/2}U q^M

and plays :code:`u_t = −K∞x_t − q^{M_t}`. The target of round s is :code:`b_s = Λ^{1/2}U q_{∞;h}`,
built from the h disturbances :code:`w_s, …, w_{s+h−1}`. The last of them is recovered from
:code:`x_{s+h}`, so the feedback of round s is consumed at round :code:`s + h` (delay τ = h).

All regression vectors live on the effective range of Σ∞.
"""

from __future__ import annotations

import logging
from collections import deque
from typing import Deque, List, Optional, Sequence

import numpy as np

from .config import SolverConfig, ProjectionConfig
from .dap_policy import DapConfig, DapParams, dap_control, deflatten
from .domain import DapSpectralDomain
from .errors import DimensionMismatch, DisturbanceBoundViolated
from .flh import PrunePolicy
from .lqr_system import LqrConstants, compute_q_inf
from .ons import DEFAULT_PROJECTION
from .barrier import DEFAULT_SOLVER
from .prodr import DelayedProdr, ProdrConfig, RoundDiagnostics, lqr_prodr_config

logger = logging.getLogger(__name__)

DISTURBANCE_TOL = 1e-9


def build_covariate(history: Sequence[np.ndarray], Lambda_inf: np.ndarray, U_inf: np.ndarray,
                    m: Optional[int] = None) -> np.ndarray:
    """
    The covariate matrix :code:`[w_{t−1}ᵀ … w_{t−m}ᵀ] ⊗ (Λ^{1/2}U)` on the effective range of Σ∞.

    :param history: past disturbances, most recent (w_{t−1}) first; missing ones count as zero
    :param Lambda_inf: diagonal eigenvalue matrix of Σ∞ (zero outside the effective range)
    :param U_inf: eigenvector rows of Σ∞
    :param m: memory, defaults to ``len(history)``
    :return: matrix of shape :code:`(rank, m·d_u·d_x)`
    """
    history = [np.asarray(w, dtype=float) for w in history]
    m = len(history) if m is None else int(m)
    if m < 1:
        raise DimensionMismatch("the covariate needs a memory of at least one disturbance")
    eigenvalues = np.diag(Lambda_inf)
    rank = int(np.count_nonzero(eigenvalues > 0))
    factor = np.sqrt(eigenvalues[:rank])[:, None] * U_inf[:rank]
    if not history:
        raise DimensionMismatch("the dimension of the disturbances is unknown without a history")
    d_x = history[0].shape[0]
    stacked = np.zeros(m * d_x)
    for i, w in enumerate(history[:m]):
        if w.shape != (d_x,):
            raise DimensionMismatch(f"disturbance must have shape ({d_x},), was {w.shape}")
        stacked[i * d_x:(i + 1) * d_x] = w
    return np.kron(stacked[None, :], factor)


def build_bias(disturbances: Sequence[np.ndarray], consts: LqrConstants) -> np.ndarray:
    """
    The regression target :code:`b = Λ^{1/2}U q_{∞;h}` on the effective range of Σ∞.

    :param disturbances: the h disturbances following the round, in time order
    """
    return consts.range_factor @ compute_q_inf(consts, disturbances)


def recover_disturbance(x_t: np.ndarray, u_t: np.ndarray, x_next: np.ndarray, A: np.ndarray, B: np.ndarray,
                        tol: float = DISTURBANCE_TOL, round_index: Optional[int] = None) -> np.ndarray:
    """
    :code:`w_t = x_{t+1} − A x_t − B u_t`.

    :raises DisturbanceBoundViolated: if :code:`‖w_t‖₂ > 1 + tol`
    """
    w = np.asarray(x_next, dtype=float) - A @ np.asarray(x_t, dtype=float) - B @ np.asarray(u_t, dtype=float)
    norm = float(np.linalg.norm(w))
    if norm > 1.0 + tol:
        raise DisturbanceBoundViolated(norm, round_index)
    return w


class ControllerState:
    """
    The online controller: delayed proper regression over the DAP class :code:`M(m, R, γ)`.

    Call :func:`control_step` (or the instance) once per round with the observed state.

    :param consts: system constants; ``consts.h`` is the feedback delay
    :param dap_cfg: the policy class
    :param config: learner parameters, derived with :func:`~nonstatlqr.prodr.lqr_prodr_config` if omitted
    :param prune: FLH pruning policy
    """

    def __init__(self, consts: LqrConstants, dap_cfg: DapConfig, config: Optional[ProdrConfig] = None,
                 prune: PrunePolicy = PrunePolicy.NONE, solver_cfg: SolverConfig = DEFAULT_SOLVER,
                 projection_cfg: ProjectionConfig = DEFAULT_PROJECTION):
        if consts.spec is None:
            raise ValueError("constants without a system description")
        self.consts = consts
        self.spec = consts.spec
        self.dap_cfg = dap_cfg
        self.h = consts.h
        self.domain = DapSpectralDomain(dap_cfg, self.spec.d_u, self.spec.d_x)
        self.prodr: Optional[DelayedProdr] = None
        if consts.effective_rank > 0:
            self.config = config if config is not None else lqr_prodr_config(consts, dap_cfg, tau=self.h)
            self.prodr = DelayedProdr(self.config, self.domain, tau=self.h, solver_cfg=solver_cfg,
                                      projection_cfg=projection_cfg, prune=prune)
        else:
            self.config = config
            logger.warning("Σ∞ vanishes, the controller plays −K∞x")
        self.disturbances: Deque[np.ndarray] = deque(maxlen=dap_cfg.m + self.h)
        self.t = 0
        self.played: List[DapParams] = []
        self.diagnostics: List[RoundDiagnostics] = []
        self._last_x: Optional[np.ndarray] = None
        self._last_u: Optional[np.ndarray] = None

    def disturbance(self, j: int) -> np.ndarray:
        """The recovered :code:`w_j`; zero for rounds before the first one."""
        newest = self.t - 1
        if j < 1:
            return np.zeros(self.spec.d_x)
        offset = newest - j
        if offset < 0 or offset >= len(self.disturbances):
            raise IndexError(f"disturbance w_{j} is not buffered at round {self.t}")
        return self.disturbances[len(self.disturbances) - 1 - offset]

    def history(self, t: int) -> List[np.ndarray]:
        """:code:`[w_{t−1}, …, w_{t−m}]`"""
        return [self.disturbance(t - i) for i in range(1, self.dap_cfg.m + 1)]

    def covariate(self, t: int) -> np.ndarray:
        return build_covariate(self.history(t), self.consts.Lambda_inf, self.consts.U_inf, self.dap_cfg.m)

    def bias(self, s: int) -> np.ndarray:
        """Target of round ``s`` from :code:`w_s, …, w_{s+h−1}`."""
        return build_bias([self.disturbance(s + j) for j in range(self.h)], self.consts)

    def __call__(self, x_t: np.ndarray) -> np.ndarray:
        return control_step(self, x_t)


def control_step(state: ControllerState, x_t: np.ndarray) -> np.ndarray:
    """
    Observe :code:`x_t`, recover :code:`w_{t−1}`, learn from the round that just became complete and
    play :code:`u_t`.

    :return: the control signal :code:`u_t`
    """
    x_t = np.asarray(x_t, dtype=float)
    spec = state.spec
    if x_t.shape != (spec.d_x,):
        raise DimensionMismatch(f"state must have shape ({spec.d_x},), was {x_t.shape}")
    if state._last_x is not None:
        w = recover_disturbance(state._last_x, state._last_u, x_t, spec.A, spec.B, round_index=state.t)
        state.disturbances.append(w)
    state.t += 1
    t = state.t

    if state.prodr is None:
        params = state.dap_cfg.zeros(spec.d_u, spec.d_x)
    else:
        A_t = state.covariate(t)
        delayed = None
        if t > state.h:
            s = t - state.h
            delayed = (state.covariate(s), state.bias(s))
        z, diagnostics = state.prodr.round(t, A_t, delayed)
        state.diagnostics.append(diagnostics)
        params = deflatten(z, state.dap_cfg.m, spec.d_u, spec.d_x, state.dap_cfg.R, state.dap_cfg.gamma)

    u = dap_control(params, state.consts.K_inf, x_t, state.history(t))
    state.played.append(params)
    state._last_x = x_t
    state._last_u = u
    return u
