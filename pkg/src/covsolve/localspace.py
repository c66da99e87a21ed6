"""Chains of orthonormal local bases and lifting between them.

Each prefix function gets a local space: an orthonormal basis whose vectors
are expressed in the coordinates of the previous level's space.  The first
level is the axis basis of the input space.  Subsequent levels remove the
previous function's gradient direction (keeping it as an explicit final
axis for inequality comparators), so that search in the last space
approximately preserves all earlier predicates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Gram-Schmidt residuals below this norm count as the zero vector.
ZERO_NORM = 1e-12


@dataclass(frozen=True)
class LocalBasis:
    """Orthonormal basis at one level; rows live in the previous level's space."""

    level: int
    vectors: np.ndarray  # shape (size, prev_dim)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def prev_dim(self) -> int:
        return self.vectors.shape[1]


def root_basis(dim: int) -> LocalBasis:
    """The axis basis of the input space (level 1)."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    return LocalBasis(1, np.eye(dim, dtype=np.float64))


def next_basis(grad: np.ndarray, prev_dim: int, *, append_gradient: bool) -> LocalBasis:
    """Basis of the next level, orthogonal to ``grad``.

    A zero gradient means the function is constant and the space is kept:
    the axis basis is returned.  Otherwise each axis of the current space is
    Gram-Schmidt-reduced against the normalised gradient and the vectors
    emitted so far (two passes, which keeps long chains orthonormal), and
    appended when a nonzero residual remains.  With ``append_gradient`` the
    normalised gradient itself becomes the final basis vector, giving
    inequality comparators an explicit axis to constrain.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != (prev_dim,):
        raise ValueError(f"gradient of dimension {grad.shape} in space of {prev_dim}")
    norm = float(np.linalg.norm(grad))
    if norm == 0.0:
        return LocalBasis(0, np.eye(prev_dim, dtype=np.float64))

    unit_grad = grad / norm
    emitted: list[np.ndarray] = []
    for j in range(prev_dim):
        w = np.zeros(prev_dim, dtype=np.float64)
        w[j] = 1.0
        for _ in range(2):
            w = w - (w @ unit_grad) * unit_grad
            for v in emitted:
                w = w - (w @ v) * v
        w_norm = float(np.linalg.norm(w))
        if w_norm >= ZERO_NORM:
            emitted.append(w / w_norm)
    if append_gradient:
        emitted.append(unit_grad)
    # an EQ predicate over a 1-dimensional space leaves an empty basis;
    # keep the two-dimensional shape so the chain stays well-formed
    vectors = np.array(emitted, dtype=np.float64).reshape(len(emitted), prev_dim)
    return LocalBasis(0, vectors)


def project_to_level(w: np.ndarray, basis: LocalBasis) -> np.ndarray:
    """Coordinates of ``w`` (previous-level vector) in the next level's basis."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (basis.prev_dim,):
        raise ValueError(f"vector of dimension {w.shape} under basis over {basis.prev_dim}")
    return basis.vectors @ w


class BasisChain:
    """Bases B_1..B_k with every vector's root-space form cached.

    The chain is grown once per solver iteration and read-only afterwards.
    ``lifted(i)`` holds the level-i basis vectors expressed in root
    coordinates, so lifting a vector from any level is a single product.
    """

    def __init__(self, dim: int):
        root = root_basis(dim)
        self._bases: list[LocalBasis] = [root]
        self._lifted: list[np.ndarray] = [root.vectors]

    def __len__(self) -> int:
        return len(self._bases)

    @property
    def root_dim(self) -> int:
        return self._lifted[0].shape[1]

    def basis(self, level: int) -> LocalBasis:
        """The basis at 1-based ``level``."""
        return self._bases[level - 1]

    def lifted(self, level: int) -> np.ndarray:
        """Level ``level`` basis vectors as rows in root coordinates."""
        return self._lifted[level - 1]

    def dim_at(self, level: int) -> int:
        return self._bases[level - 1].size

    def extend(self, basis: LocalBasis) -> LocalBasis:
        """Append the next level; the basis rows must live in the current top space."""
        top = self._bases[-1]
        if basis.prev_dim != top.size:
            raise ValueError(
                f"basis over dimension {basis.prev_dim} cannot follow level of size {top.size}")
        leveled = LocalBasis(len(self._bases) + 1, basis.vectors)
        self._bases.append(leveled)
        self._lifted.append(leveled.vectors @ self._lifted[-1])
        return leveled

    def lift(self, u: np.ndarray, level: int | None = None) -> np.ndarray:
        """Express a level-``level`` vector in root coordinates (the * operator)."""
        if level is None:
            level = len(self._bases)
        u = np.asarray(u, dtype=np.float64)
        lifted = self._lifted[level - 1]
        if u.shape != (lifted.shape[0],):
            raise ValueError(
                f"vector of dimension {u.shape} at level {level} of size {lifted.shape[0]}")
        return u @ lifted


def orthonormality_error(vectors: np.ndarray) -> float:
    """Largest deviation of the rows from pairwise orthonormality."""
    if vectors.shape[0] == 0:
        return 0.0
    gram = vectors @ vectors.T
    return float(np.max(np.abs(gram - np.eye(vectors.shape[0]))))
