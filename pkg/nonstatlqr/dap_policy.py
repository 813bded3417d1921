# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Disturbance action policies (DAP).

A DAP with memory m is a list of matrices :code:`M^{[1]}, …, M^{[m]}` (each d_u × d_x) and plays

.. code-block:: text

    u_t = −K∞ x_t − Σ_i M^{[i]} w_{t−i}

The policy class :code:`M(m, R, γ)` requires :code:`‖M^{[i]}‖_op ≤ R γ^{i−1}`.

Disturbance histories are passed most recent first, i.e. :code:`history[0]` is w_{t−1}.
Missing entries (rounds before the first one) count as zero vectors.

The flattened layout used by the regression learner stacks the column-major vectorisation of
each block, blocks in order 1..m:

.. code-block:: text

    flatten(M) = [vec(M^{[1]}); …; vec(M^{[m]})],   vec(X) = [X[:,0]; X[:,1]; …]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, List, Iterator, Optional

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch

DEFAULT_TOL_PROJ = 1e-8


@dataclass(frozen=True)
class DapConfig:
    """Memory, radius and decay of the policy class :code:`M(m, R, γ)`."""

    m: int = 1
    R: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError(f"memory m must be 1 or greater, was {self.m}")
        if not self.R > 0:
            raise ValueError(f"radius R must be positive, was {self.R}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], was {self.gamma}")
        object.__setattr__(self, "m", int(self.m))

    def block_bound(self, i: int) -> float:
        """Operator norm bound :code:`R γ^{i−1}` of block ``i`` (1-based)."""
        return self.R * self.gamma ** (i - 1)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([self.block_bound(i) for i in range(1, self.m + 1)])

    def zeros(self, d_u: int, d_x: int) -> DapParams:
        return DapParams(np.zeros((self.m, d_u, d_x)), self.R, self.gamma)


@dataclass(frozen=True)
class DapParams:
    """
    The matrices of one DAP.

    :param blocks: array of shape (m, d_u, d_x); :code:`blocks[i−1]` is :code:`M^{[i]}`
    :param R: radius of the policy class
    :param gamma: decay of the policy class
    """

    blocks: np.ndarray
    R: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        blocks = np.array(self.blocks, dtype=float)
        if blocks.ndim == 2:
            blocks = blocks[None]
        if blocks.ndim != 3:
            raise DimensionMismatch(f"DAP blocks must have shape (m, d_u, d_x), was {blocks.shape}")
        if blocks.shape[0] < 1:
            raise DimensionMismatch("a DAP needs at least one block")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    @property
    def d_u(self) -> int:
        return self.blocks.shape[1]

    @property
    def d_x(self) -> int:
        return self.blocks.shape[2]

    @property
    def config(self) -> DapConfig:
        return DapConfig(self.m, self.R, self.gamma)

    def __getitem__(self, i: int) -> np.ndarray:
        """1-based access to :code:`M^{[i]}`."""
        if not 1 <= i <= self.m:
            raise IndexError(f"block index must be in 1..{self.m}, was {i}")
        return self.blocks[i - 1]


@dataclass
class DapSequence:
    """A sequence of DAPs sharing (m, R, γ), one per round."""

    params: List[DapParams] = field(default_factory=list)

    def __post_init__(self):
        if self.params:
            first = self.params[0]
            for p in self.params[1:]:
                if (p.m, p.d_u, p.d_x) != (first.m, first.d_u, first.d_x):
                    raise DimensionMismatch("all DAPs of a sequence must have the same shape")
                if (p.R, p.gamma) != (first.R, first.gamma):
                    raise ValueError("all DAPs of a sequence must share R and gamma")

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self) -> Iterator[DapParams]:
        return iter(self.params)

    def __getitem__(self, index: int) -> DapParams:
        return self.params[index]

    def append(self, params: DapParams) -> None:
        if self.params and params.blocks.shape != self.params[0].blocks.shape:
            raise DimensionMismatch("all DAPs of a sequence must have the same shape")
        self.params.append(params)

    def __add__(self, other: DapSequence) -> DapSequence:
        return DapSequence(list(self.params) + list(other.params))


def _history_matrix(history: Sequence[np.ndarray], m: int, d_x: int) -> np.ndarray:
    """Stack the m most recent disturbances into an (m, d_x) array, zero padded."""
    stacked = np.zeros((m, d_x))
    for i, w in enumerate(list(history)[:m]):
        w = np.asarray(w, dtype=float)
        if w.shape != (d_x,):
            raise DimensionMismatch(f"disturbance must have shape ({d_x},), was {w.shape}")
        stacked[i] = w
    return stacked


def dap_feedforward(M: DapParams, history: Sequence[np.ndarray]) -> np.ndarray:
    """:code:`q^M = Σ_i M^{[i]} w_{t−i}` for a most-recent-first history."""
    stacked = _history_matrix(history, M.m, M.d_x)
    return np.einsum("iuk,ik->u", M.blocks, stacked)


def dap_control(M: DapParams, K_inf: np.ndarray, x: np.ndarray,
                history: Sequence[np.ndarray]) -> np.ndarray:
    """
    The control signal :code:`u_t = −K∞ x_t − Σ_i M^{[i]} w_{t−i}`.

    :param M: policy matrices
    :param K_inf: optimal gain, d_u × d_x
    :param x: current state x_t
    :param history: past disturbances, most recent (w_{t−1}) first; may be shorter than m
    :raises DimensionMismatch: on incompatible shapes
    """
    x = np.asarray(x, dtype=float)
    K_inf = np.asarray(K_inf, dtype=float)
    if K_inf.shape != (M.d_u, M.d_x):
        raise DimensionMismatch(f"K∞ must be {M.d_u}x{M.d_x}, was {K_inf.shape}")
    if x.shape != (M.d_x,):
        raise DimensionMismatch(f"state must have shape ({M.d_x},), was {x.shape}")
    return -K_inf @ x - dap_feedforward(M, history)


def flatten(M: DapParams) -> np.ndarray:
    """Stack the column-major vectorisations of all blocks into one vector of length m·d_u·d_x."""
    return np.concatenate([block.reshape(-1, order="F") for block in M.blocks])


def deflatten(z: np.ndarray, m: int, d_u: int, d_x: int, R: float = 1.0, gamma: float = 1.0) -> DapParams:
    """
    Inverse of :func:`flatten`.

    :raises DimensionMismatch: if ``z`` does not have length m·d_u·d_x
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (m * d_u * d_x,):
        raise DimensionMismatch(f"flattened DAP must have length {m * d_u * d_x}, was {z.shape}")
    blocks = z.reshape(m, d_x, d_u).transpose(0, 2, 1)
    return DapParams(blocks, R, gamma)


def clip_singular_values(block: np.ndarray, bound: float) -> np.ndarray:
    """Euclidean projection of a matrix onto the spectral norm ball of radius ``bound``."""
    u, s, vt = linalg.svd(block, full_matrices=False)
    if s.size == 0 or s[0] <= bound:
        return block
    return (u * np.minimum(s, bound)) @ vt


def project_dap(M: DapParams) -> DapParams:
    """
    Project a DAP onto :code:`M(m, R, γ)` by clipping the singular values of every block.

    Blocks that are already feasible are returned unchanged.
    """
    blocks = [clip_singular_values(M.blocks[i], M.R * M.gamma ** i) for i in range(M.m)]
    return DapParams(np.stack(blocks), M.R, M.gamma)


def is_member(M: DapParams, tol: float = DEFAULT_TOL_PROJ) -> bool:
    """True if :code:`‖M^{[i]}‖_op ≤ R γ^{i−1} + tol` for all blocks."""
    for i in range(M.m):
        if np.linalg.norm(M.blocks[i], ord=2) > M.R * M.gamma ** i + tol:
            return False
    return True


def dap_distance(first: DapParams, second: DapParams) -> float:
    """Σ_i of the entrywise absolute sum of :code:`first^{[i]} − second^{[i]}`."""
    if first.blocks.shape != second.blocks.shape:
        raise DimensionMismatch("DAPs of different shapes")
    return float(np.abs(first.blocks - second.blocks).sum())


def tv_of_sequence(seq: DapSequence) -> float:
    """
    Total variation :code:`Σ_{t≥2} Σ_i ‖M_t^{[i]} − M_{t−1}^{[i]}‖₁` (entrywise ℓ₁ per block).
    """
    if len(seq) == 0:
        raise ValueError("total variation of an empty sequence")
    if len(seq) == 1:
        return 0.0
    stacked = np.stack([p.blocks for p in seq])
    return float(np.abs(np.diff(stacked, axis=0)).sum())


def lower_bound_dap(a: float, R: float = 1.0, gamma: float = 1.0) -> DapParams:
    """The comparator :code:`[[0, −a], [0, 0]]` of the lower bound construction."""
    return DapParams(np.array([[[0.0, -a], [0.0, 0.0]]]), R, gamma)


def dap_block_norms(M: DapParams) -> np.ndarray:
    return np.array([np.linalg.norm(block, ord=2) for block in M.blocks])


def sequence_from_blocks(blocks: Sequence[np.ndarray], R: float = 1.0, gamma: float = 1.0,
                         config: Optional[DapConfig] = None) -> DapSequence:
    if config is not None:
        R, gamma = config.R, config.gamma
    return DapSequence([DapParams(b, R, gamma) for b in blocks])
