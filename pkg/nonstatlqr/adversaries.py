# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Disturbance generators and hindsight comparators.

All adversaries are oblivious: the whole disturbance sequence is drawn up front from the seed, so a
run is reproducible and the comparator rollouts see exactly the disturbances the learner saw.
Every emitted disturbance satisfies :code:`‖w_t‖₂ ≤ 1`.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence, Tuple, Union, Optional

import numpy as np

from .dap_policy import DapParams, DapSequence, lower_bound_dap, tv_of_sequence
from .errors import DimensionMismatch, DisturbanceBoundViolated, InvalidBudget

NORM_TOL = 1e-12


def _check_norms(disturbances: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(disturbances, axis=1)
    if norms.size and norms.max() > 1.0 + NORM_TOL:
        worst = int(np.argmax(norms))
        raise DisturbanceBoundViolated(float(norms[worst]), worst + 1)
    return disturbances


class DisturbanceAdversary(ABC):
    """
    Produces the disturbances :code:`w_1, …, w_n`.

    An adversary created with its own ``seed`` uses it instead of the seed of the run.
    """

    name = "adversary"
    seed: Optional[int] = None

    def rng(self, seed: int) -> np.random.Generator:
        return np.random.default_rng(self.seed if self.seed is not None else seed)

    @abstractmethod
    def generate(self, n: int, d_x: int, seed: int) -> np.ndarray:
        """
        Draw the disturbance sequence.

        :return: array of shape (n, d_x); row t−1 holds :code:`w_t`
        """


class LowerBoundAdversary(DisturbanceAdversary):
    """
    :code:`w_t = [y_t, 1]ᵀ/√2` with independent signs :code:`y_t = ±1`.

    The scaling by 1/√2 keeps :code:`‖w_t‖₂ = 1`; regret scales by 1/2.
    """

    name = "lower-bound"

    def __init__(self, C_n: float, seed: Optional[int] = None):
        if not C_n > 0:
            raise InvalidBudget(f"path length budget C_n must be positive, was {C_n}")
        self.C_n = float(C_n)
        self.seed = seed

    def signs(self, n: int, seed: int) -> np.ndarray:
        return self.rng(seed).choice(np.array([-1.0, 1.0]), size=n)

    def generate(self, n: int, d_x: int, seed: int) -> np.ndarray:
        if d_x != 2:
            raise DimensionMismatch(f"the lower bound adversary needs d_x = 2, got {d_x}")
        y = self.signs(n, seed)
        return np.column_stack([y, np.ones(n)]) / math.sqrt(2.0)


class PiecewiseConstantAdversary(DisturbanceAdversary):
    """
    Constant disturbance levels held for ``segment_length`` rounds each, cycling through ``levels``.

    :param levels: the disturbance vectors, each of norm at most 1; drawn from the seed if omitted
    :param segment_length: rounds per level
    :param segments: number of random levels when ``levels`` is omitted
    """

    name = "piecewise"

    def __init__(self, levels: Optional[Sequence[Sequence[float]]] = None, segment_length: Optional[int] = None,
                 segments: int = 8):
        self.levels = None if levels is None else _check_norms(np.atleast_2d(np.asarray(levels, dtype=float)))
        if segment_length is not None and segment_length < 1:
            raise ValueError(f"segment length must be 1 or greater, was {segment_length}")
        self.segment_length = segment_length
        self.segments = segments

    def generate(self, n: int, d_x: int, seed: int) -> np.ndarray:
        levels = self.levels
        if levels is None:
            rng = self.rng(seed)
            directions = rng.normal(size=(self.segments, d_x))
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            levels = directions * rng.uniform(0.0, 1.0, size=(self.segments, 1))
        if levels.shape[1] != d_x:
            raise DimensionMismatch(f"levels have dimension {levels.shape[1]}, system has {d_x}")
        length = self.segment_length or max(1, math.ceil(n / len(levels)))
        index = (np.arange(n) // length) % len(levels)
        return levels[index].copy()


class SinusoidalDriftAdversary(DisturbanceAdversary):
    """:code:`w_t[k] = amplitude · sin(2πt/period + φ_k) / √d_x` with phases φ drawn from the seed."""

    name = "sinusoidal"

    def __init__(self, amplitude: float = 1.0, period: float = 64.0):
        if not 0 <= amplitude <= 1:
            raise ValueError(f"amplitude must be in [0, 1], was {amplitude}")
        if not period > 0:
            raise ValueError(f"period must be positive, was {period}")
        self.amplitude = float(amplitude)
        self.period = float(period)

    def generate(self, n: int, d_x: int, seed: int) -> np.ndarray:
        phases = self.rng(seed).uniform(0.0, 2.0 * math.pi, size=d_x)
        t = np.arange(1, n + 1)[:, None]
        return self.amplitude * np.sin(2.0 * math.pi * t / self.period + phases) / math.sqrt(d_x)


class ReplayAdversary(DisturbanceAdversary):
    """
    Replays recorded disturbances.

    :param disturbances: array of shape (N, d_x), or the path of a JSON file holding such a nested
        list (optionally under the key :code:`"disturbances"`)
    :raises DisturbanceBoundViolated: if a recorded disturbance has norm above 1
    """

    name = "replay"

    def __init__(self, disturbances: Union[str, Path, np.ndarray, Sequence]):
        if isinstance(disturbances, (str, Path)):
            with open(disturbances, "r", encoding="utf-8") as handle:
                data = json.load(handle)
            if isinstance(data, dict):
                unknown = sorted(set(data) - {"disturbances"})
                if unknown or "disturbances" not in data:
                    raise ValueError(f"replay file must hold a 'disturbances' list, found keys {sorted(data)}")
                data = data["disturbances"]
            disturbances = data
        self.disturbances = _check_norms(np.atleast_2d(np.asarray(disturbances, dtype=float)))

    def generate(self, n: int, d_x: int, seed: int) -> np.ndarray:
        if self.disturbances.shape[1] != d_x:
            raise DimensionMismatch(f"recorded disturbances have dimension {self.disturbances.shape[1]}, "
                                    f"system has {d_x}")
        if len(self.disturbances) < n:
            raise ValueError(f"only {len(self.disturbances)} recorded disturbances for {n} rounds")
        return self.disturbances[:n].copy()


class ComparatorOracle(ABC):
    """Chooses a comparator policy sequence in hindsight."""

    @abstractmethod
    def sequence(self, disturbances: np.ndarray) -> DapSequence:
        """The comparator :code:`M_1, …, M_n` for the realized disturbances (one row per round)."""


class FixedDapComparator(ComparatorOracle):
    def __init__(self, params: DapParams):
        self.params = params

    def sequence(self, disturbances: np.ndarray) -> DapSequence:
        return DapSequence([self.params] * len(disturbances))


class SuppliedComparator(ComparatorOracle):
    def __init__(self, seq: DapSequence):
        self.seq = seq

    def sequence(self, disturbances: np.ndarray) -> DapSequence:
        if len(self.seq) != len(disturbances):
            raise DimensionMismatch(f"supplied comparator has {len(self.seq)} rounds, run has {len(disturbances)}")
        return self.seq


class BinnedLowerBoundComparator(ComparatorOracle):
    """
    The comparator of the lower bound construction.

    Rounds are grouped into bins of ``width`` rounds. In the bin containing round t the comparator
    plays :code:`[[0, −a], [0, 0]]` where a is the mean of the signs :code:`y_s` of the bin, so that
    its control :code:`u_t = [a/√2, 0]ᵀ` predicts the disturbance :code:`w_t`.
    """

    def __init__(self, width: int, R: float = 1.0, gamma: float = 1.0):
        if width < 1:
            raise ValueError(f"bin width must be 1 or greater, was {width}")
        self.width = int(width)
        self.R = R
        self.gamma = gamma

    def bin_means(self, disturbances: np.ndarray) -> np.ndarray:
        """Per round, the mean sign of its bin."""
        y = disturbances[:, 0] * math.sqrt(2.0)
        if len(y) == 0:
            return np.zeros(0)
        starts = np.arange(0, len(y), self.width)
        counts = np.diff(np.append(starts, len(y)))
        return np.repeat(np.add.reduceat(y, starts) / counts, counts)

    def sequence(self, disturbances: np.ndarray) -> DapSequence:
        return DapSequence([lower_bound_dap(a, self.R, self.gamma) for a in self.bin_means(disturbances)])


def lower_bound_bin_width(n: int, C_n: float) -> int:
    """:code:`W = round(n^{2/3} (8 ln n)^{1/3} / C_n^{2/3})`, clamped to [1, n]."""
    if not C_n > 0:
        raise InvalidBudget(f"path length budget C_n must be positive, was {C_n}")
    if n < 1:
        raise ValueError(f"n must be 1 or greater, was {n}")
    width = round(n ** (2.0 / 3.0) * (8.0 * math.log(n)) ** (1.0 / 3.0) / C_n ** (2.0 / 3.0))
    return int(min(max(width, 1), n))


def lower_bound_adversary(n: int, C_n: float, seed: Optional[int] = None
                          ) -> Tuple[LowerBoundAdversary, BinnedLowerBoundComparator]:
    """
    The adversary and the comparator of the lower bound construction.

    Without a ``seed`` the adversary draws its signs from the seed of the run.

    :raises InvalidBudget: if ``C_n`` is not positive
    """
    adversary = LowerBoundAdversary(C_n, seed)
    return adversary, BinnedLowerBoundComparator(lower_bound_bin_width(n, C_n))


def check_comparator_budget(seq: DapSequence, C_n: float) -> Tuple[float, bool]:
    """Total variation of a comparator and whether it stays within the budget ``C_n``."""
    tv = tv_of_sequence(seq)
    return tv, tv <= C_n
