"""Flat pseudo-Euclidean space R^{n+1}_s: inner product, null test, motions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AmbientSpace:
    """R^{dim_total}_{neg_count} with eta = diag(-1 x s, +1 x (dim_total - s))."""

    dim_total: int
    neg_count: int = 0

    def __post_init__(self):
        if self.dim_total < 4:
            raise ValueError(f"dim_total must be >= 4 (hypersurface dimension > 2), got {self.dim_total}")
        if not 0 <= self.neg_count <= self.dim_total:
            raise ValueError(f"signature {self.neg_count} out of range for dimension {self.dim_total}")

    @property
    def n(self):
        """Dimension of the hypersurfaces living in this space."""
        return self.dim_total - 1

    @property
    def eta_diag(self):
        d = np.ones(self.dim_total)
        d[: self.neg_count] = -1.0
        return d

    @property
    def eta(self):
        return np.diag(self.eta_diag)

    def _check(self, *vectors):
        for v in vectors:
            if np.shape(v)[-1] != self.dim_total:
                raise ValueError(f"vector of length {np.shape(v)[-1]} in a {self.dim_total}-dimensional space")


def inner(space: AmbientSpace, x, y):
    """eta(x, y); broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    space._check(x, y)
    return np.sum(x * space.eta_diag * y, axis=-1)


def is_isotropic(space: AmbientSpace, x, tol=1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    scale = np.max(np.abs(x))
    if scale <= tol:
        return False
    return bool(abs(inner(space, x, x)) <= tol * scale**2)


@dataclass(frozen=True)
class Motion:
    """Affine map p -> A p + b of the ambient space."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.linear, dtype=float)
        b = np.asarray(self.translation, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise ValueError(f"incompatible motion shapes {A.shape} and {b.shape}")
        object.__setattr__(self, "linear", A)
        object.__setattr__(self, "translation", b)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim), np.zeros(dim))

    def compose(self, other: "Motion") -> "Motion":
        """self after other."""
        return Motion(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def inverse(self) -> "Motion":
        Ainv = np.linalg.inv(self.linear)
        return Motion(Ainv, -Ainv @ self.translation)


def pseudo_orthogonality_defect(space: AmbientSpace, A) -> float:
    """max |A^T eta A - eta|."""
    A = np.asarray(A, dtype=float)
    eta = space.eta
    return float(np.max(np.abs(A.T @ eta @ A - eta)))


def verify_motion(space: AmbientSpace, m: Motion, tol=1e-10) -> bool:
    if m.linear.shape != (space.dim_total, space.dim_total):
        return False
    return pseudo_orthogonality_defect(space, m.linear) <= tol


def apply_motion(m: Motion, p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != m.translation.shape[0]:
        raise ValueError(f"point of length {p.shape[-1]} for a motion of R^{m.translation.shape[0]}")
    return p @ m.linear.T + m.translation


def boost(dim, t, i=0, j=1):
    """Hyperbolic rotation by rapidity t in the (i, j) coordinate plane."""
    A = np.eye(dim)
    c, s = np.cosh(t), np.sinh(t)
    A[i, i] = A[j, j] = c
    A[i, j] = A[j, i] = s
    return A


def rotation(dim, theta, i=0, j=1):
    A = np.eye(dim)
    c, s = np.cos(theta), np.sin(theta)
    A[i, i] = A[j, j] = c
    A[i, j], A[j, i] = -s, s
    return A


def random_motion(space: AmbientSpace, rng, rapidity=0.5, shift=1.0) -> Motion:
    """A random eta-preserving motion: block rotations, boosts and a shift."""
    s, d = space.neg_count, space.dim_total
    A = np.eye(d)
    for block in (range(0, s), range(s, d)):
        k = len(block)
        if k >= 1:
            q, r = np.linalg.qr(rng.standard_normal((k, k)))
            q = q * np.sign(np.diag(r))
            A[np.ix_(block, block)] = q
    if 0 < s < d:
        for i in range(s):
            j = s + int(rng.integers(d - s))
            A = boost(d, rapidity * rng.uniform(-1, 1), i, j) @ A
    return Motion(A, shift * rng.uniform(-1, 1, size=d))
