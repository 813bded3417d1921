# This file is part of the NonstatLQR library.
#
# Copyright (c) 2026 The NonstatLQR developers
#
# This work is licensed under the terms of the MIT license.
# For a copy, see the accompanying LICENSE.txt file or
# go to <https://opensource.org/licenses/MIT>.

"""
Convex decision domains for the regression learner.

Two variants are supported:

* :class:`BoxDomain` - the coordinate box :code:`{x : |x_j| ≤ r_j}`.
* :class:`DapSpectralDomain` - flattened DAPs :code:`flatten(M)` with :code:`M ∈ M(m, R, γ)`,
  i.e. a product of spectral norm balls, one per block.

Both are symmetric around 0, so the scalar range :code:`{aᵀx : x ∈ D}` is the interval
:code:`[−h_D(a), h_D(a)]` where :code:`h_D` is the support function.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import List, Union, Sequence

import cvxpy as cp
import numpy as np
from scipy import linalg

from .dap_policy import DapConfig, clip_singular_values
from .errors import DimensionMismatch, InvalidBounds


class DecisionDomain(ABC):
    """
    Common interface of the decision domains.

    Every member x of a domain satisfies :code:`‖x‖₁ ≤ chi` and :code:`‖x‖∞ ≤ R_tilde`, and every
    domain contains 0.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        """Dimension of the vectors in this domain."""

    @property
    @abstractmethod
    def chi(self) -> float:
        """Bound on the ℓ₁ norm of the members."""

    @property
    @abstractmethod
    def R_tilde(self) -> float:
        """Bound on the ℓ∞ norm of the members; the half width of the enclosing box."""

    @abstractmethod
    def support(self, a: np.ndarray) -> float:
        """
        The support function :code:`max_{x∈D} aᵀx`.

        As the domain is symmetric the scalar range of :code:`aᵀx` is :code:`[−support(a), support(a)]`.
        """

    @abstractmethod
    def support_point(self, a: np.ndarray) -> np.ndarray:
        """A maximiser of :code:`aᵀx` over the domain."""

    @abstractmethod
    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the domain."""

    @abstractmethod
    def contains(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        """Membership test with tolerance."""

    def constraints(self, z: cp.Expression) -> List[cp.Constraint]:
        """Membership of the cvxpy expression ``z`` as convex constraints."""
        raise NotImplementedError(f"{type(self).__name__} has no conic description")

    def enclosing_box(self) -> BoxDomain:
        """The box :code:`D_∞(R̃)` that contains this domain."""
        return BoxDomain(self.dim, self.R_tilde)

    def check_vector(self, x: np.ndarray, name: str = "vector") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"{name} must have shape ({self.dim},), was {x.shape}")
        return x


class BoxDomain(DecisionDomain):
    """
    The box :code:`{x ∈ ℝ^d : |x_j| ≤ r_j}`.

    :param dim: dimension d
    :param radius: half width, either a single positive number or one per coordinate
    """

    def __init__(self, dim: int, radius: Union[float, Sequence[float], np.ndarray]):
        if int(dim) < 1:
            raise InvalidBounds(f"dimension must be 1 or greater, was {dim}")
        self._dim = int(dim)
        radius = np.broadcast_to(np.asarray(radius, dtype=float), (self._dim,)).copy()
        if np.any(~np.isfinite(radius)) or np.any(radius <= 0):
            raise InvalidBounds(f"box radius must be positive and finite, was {radius}")
        self.radius = radius

    def __repr__(self) -> str:
        return f"BoxDomain(dim={self._dim}, radius={self.radius.tolist()})"

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def chi(self) -> float:
        return float(self.radius.sum())

    @property
    def R_tilde(self) -> float:
        return float(self.radius.max())

    @property
    def lower(self) -> np.ndarray:
        return -self.radius

    @property
    def upper(self) -> np.ndarray:
        return self.radius

    def support(self, a: np.ndarray) -> float:
        return float(np.abs(a) @ self.radius)

    def support_point(self, a: np.ndarray) -> np.ndarray:
        return self.radius * np.sign(a)

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, -self.radius, self.radius)

    def contains(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        return bool(np.all(np.abs(x) <= self.radius + tol))

    def constraints(self, z: cp.Expression) -> List[cp.Constraint]:
        return [cp.abs(z) <= self.radius]

    def enclosing_box(self) -> BoxDomain:
        return BoxDomain(self._dim, self.R_tilde)


class DapSpectralDomain(DecisionDomain):
    """
    Flattened DAPs of the policy class :code:`M(m, R, γ)`.

    A vector z of length m·d_u·d_x belongs to the domain if every block of :code:`deflatten(z)`
    has operator norm at most :code:`R γ^{i−1}`. Blocks use the column-major layout of
    :func:`~nonstatlqr.dap_policy.flatten`.

    The ℓ₁ bound is :code:`chi = √(d_u d_x min(d_u, d_x)) Σ_i R γ^{i−1}` and the enclosing box has
    half width :code:`R̃ = R max(1, γ √min(d_u, d_x))`.
    """

    def __init__(self, config: DapConfig, d_u: int, d_x: int):
        if int(d_u) < 1 or int(d_x) < 1:
            raise InvalidBounds(f"block shape must be positive, was {d_u}x{d_x}")
        self.config = config
        self.d_u = int(d_u)
        self.d_x = int(d_x)
        self._block_size = self.d_u * self.d_x
        self._bounds = config.bounds

    def __repr__(self) -> str:
        return (f"DapSpectralDomain(m={self.config.m}, R={self.config.R}, gamma={self.config.gamma}, "
                f"d_u={self.d_u}, d_x={self.d_x})")

    @property
    def dim(self) -> int:
        return self.config.m * self._block_size

    @property
    def chi(self) -> float:
        return math.sqrt(self._block_size * min(self.d_u, self.d_x)) * float(self._bounds.sum())

    @property
    def R_tilde(self) -> float:
        return self.config.R * max(1.0, self.config.gamma * math.sqrt(min(self.d_u, self.d_x)))

    def blocks(self, z: np.ndarray) -> np.ndarray:
        """Reshape a flattened vector into its (m, d_u, d_x) blocks."""
        return np.asarray(z, dtype=float).reshape(self.config.m, self.d_x, self.d_u).transpose(0, 2, 1)

    def unblock(self, blocks: np.ndarray) -> np.ndarray:
        return np.asarray(blocks).transpose(0, 2, 1).reshape(-1)

    def support(self, a: np.ndarray) -> float:
        # dual of the spectral norm is the nuclear norm
        total = 0.0
        for block, bound in zip(self.blocks(a), self._bounds):
            total += bound * float(linalg.svdvals(block).sum())
        return total

    def support_point(self, a: np.ndarray) -> np.ndarray:
        result = []
        for block, bound in zip(self.blocks(a), self._bounds):
            u, s, vt = linalg.svd(block, full_matrices=False)
            rank = int(np.sum(s > 0))
            result.append(bound * (u[:, :rank] @ vt[:rank]))
        return self.unblock(np.stack(result))

    def project(self, x: np.ndarray) -> np.ndarray:
        clipped = [clip_singular_values(block, bound) for block, bound in zip(self.blocks(x), self._bounds)]
        return self.unblock(np.stack(clipped))

    def contains(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        for block, bound in zip(self.blocks(x), self._bounds):
            if np.linalg.norm(block, ord=2) > bound + tol:
                return False
        return True

    def constraints(self, z: cp.Expression) -> List[cp.Constraint]:
        size = self._block_size
        result = []
        for i, bound in enumerate(self._bounds):
            block = cp.reshape(z[i * size:(i + 1) * size], (self.d_u, self.d_x), order="F")
            result.append(cp.sigma_max(block) <= bound)
        return result
