# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Follow the Leading History over Online Newton Step base learners.

A base learner is started at every round. The learners are mixed with exponential weights

.. code-block:: text

    v̂^{(j)} ∝ v^{(j)} exp(−η f_t(x^{(j)}))
    v_{t+1}^{(t+1)} = 1/(t+1),   v_{t+1}^{(j)} = (1 − 1/(t+1)) v̂^{(j)}

Weights are stored as logarithms and normalized with :func:`scipy.special.logsumexp`.

The optional ``geometric`` pruning keeps a learner started at :code:`s = r·2^k` (r odd) alive for
:code:`2^{k+2}` rounds, so only O(log t) learners are active at any time. It is off by default.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .config import ProjectionConfig
from .domain import BoxDomain
from .errors import DimensionMismatch
from .ons import OnsState, ons_init, ons_update, DEFAULT_PROJECTION

logger = logging.getLogger(__name__)


class PrunePolicy(Enum):
    NONE = "none"
    GEOMETRIC = "geometric"


def learner_lifetime(start_time: int) -> int:
    """Number of rounds a learner started at ``start_time`` survives under geometric pruning."""
    if start_time < 1:
        raise ValueError(f"start time must be 1 or greater, was {start_time}")
    k = (start_time & -start_time).bit_length() - 1
    return 2 ** (k + 2)


@dataclass
class FlhState:
    """
    Weights and base learners of Follow the Leading History.

    :param log_weights: logarithms of the weights of the active learners
    :param learners: active learners, ordered by start time
    :param eta: learning rate of the exponential weights
    :param t: number of completed rounds
    """

    log_weights: np.ndarray
    learners: List[OnsState]
    eta: float
    zeta: float
    domain: BoxDomain
    t: int = 0
    prune: PrunePolicy = PrunePolicy.NONE
    projection: ProjectionConfig = field(default=DEFAULT_PROJECTION)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def active_learners(self) -> int:
        return len(self.learners)

    @property
    def d(self) -> int:
        return self.domain.dim

    def weight_entropy(self) -> float:
        """Shannon entropy (nats) of the weight vector."""
        weights = self.weights
        positive = weights > 0
        return float(-(weights[positive] * self.log_weights[positive]).sum())

    def predictions(self) -> np.ndarray:
        """Stack of the base learner predictions, one row per active learner."""
        return np.stack([learner.predict() for learner in self.learners])


def flh_init(d: int, eta: float, zeta: float, domain: BoxDomain, prune: PrunePolicy = PrunePolicy.NONE,
             projection: ProjectionConfig = DEFAULT_PROJECTION) -> FlhState:
    """A single learner started at round 1 with weight 1."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, was {eta}")
    return FlhState(log_weights=np.zeros(1), learners=[ons_init(d, zeta, domain, start_time=1)],
                    eta=eta, zeta=zeta, domain=domain, prune=PrunePolicy(prune), projection=projection)


def flh_predict(state: FlhState, predictions: np.ndarray) -> np.ndarray:
    """
    The convex combination :code:`Σ_j v^{(j)} x^{(j)}` of the base predictions.

    :param predictions: one row per active learner
    """
    predictions = np.atleast_2d(np.asarray(predictions, dtype=float))
    if predictions.shape[0] != state.active_learners:
        raise DimensionMismatch(f"expected {state.active_learners} predictions, got {predictions.shape[0]}")
    return state.weights @ predictions


def flh_update(state: FlhState, losses: Sequence[float], gradients: Optional[np.ndarray] = None) -> FlhState:
    """
    Exponential weights step on ``losses``, optional base learner updates, and the addition step.

    :param losses: loss of every active learner's prediction
    :param gradients: if given, one row per active learner, fed to the learner's ONS update
    :return: the updated state (changed in place)
    """
    losses = np.asarray(losses, dtype=float)
    if losses.shape != (state.active_learners,):
        raise DimensionMismatch(f"expected {state.active_learners} losses, got shape {losses.shape}")
    if not np.all(np.isfinite(losses)):
        raise ValueError("losses must be finite")

    log_weights = state.log_weights - state.eta * losses
    log_weights -= logsumexp(log_weights)

    if gradients is not None:
        gradients = np.atleast_2d(np.asarray(gradients, dtype=float))
        if gradients.shape != (state.active_learners, state.d):
            raise DimensionMismatch(f"expected gradients of shape {(state.active_learners, state.d)}, "
                                    f"got {gradients.shape}")
        for learner, gradient in zip(state.learners, gradients):
            ons_update(learner, gradient, state.projection)

    state.t += 1
    learners = state.learners
    if state.prune is PrunePolicy.GEOMETRIC:
        alive = [learner.start_time + learner_lifetime(learner.start_time) > state.t + 1 for learner in learners]
        if not all(alive):
            keep = np.flatnonzero(alive)
            learners = [learners[j] for j in keep]
            log_weights = log_weights[keep]
            if learners:
                log_weights -= logsumexp(log_weights)

    newborn = 1.0 / (state.t + 1) if learners else 1.0
    if learners:
        log_weights = log_weights + math.log1p(-newborn)
    state.log_weights = np.append(log_weights, math.log(newborn))
    state.learners = learners + [ons_init(state.d, state.zeta, state.domain, start_time=state.t + 1)]
    logger.debug("FLH round %d: %d active learners", state.t, len(state.learners))
    return state
