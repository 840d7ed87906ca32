"""Pointwise algebra of the second fundamental form: null-cone sampling,
the proportionality test for quadratic forms vanishing on the cone, and
umbilic / quasi-umbilic / generic classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .surface import ImmersionPatch, PointGeometry, chart_grid, point_geometry

DEFAULT_CONE_SAMPLES = 64


class DefiniteMetricError(ValueError):
    """The metric has no isotropic vectors."""


class ConeUndersampledError(RuntimeError):
    """L vanished on every cone sample yet is not proportional to g (undersampling)."""


@dataclass(frozen=True)
class IsotropicSample:
    vectors: np.ndarray  # (count, n), unit Euclidean length
    metric_used: np.ndarray

    def __len__(self):
        return len(self.vectors)


def sample_isotropic(g, count=DEFAULT_CONE_SAMPLES, seed=0) -> IsotropicSample:
    """Deterministic sample of null vectors of an indefinite symmetric form."""
    g = np.asarray(g, dtype=float)
    w, V = np.linalg.eigh(g)
    neg = np.flatnonzero(w < 0)
    pos = np.flatnonzero(w > 0)
    if len(neg) == 0 or len(pos) == 0:
        raise DefiniteMetricError("metric is definite: the isotropic cone is empty")
    if len(neg) + len(pos) < len(w):
        raise ValueError("metric is degenerate")
    rng = np.random.default_rng(seed)
    out = np.empty((count, len(w)))
    for k in range(count):
        a = rng.standard_normal(len(neg))
        b = rng.standard_normal(len(pos))
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        qa = np.sum(-w[neg] * a**2)
        qb = np.sum(w[pos] * b**2)
        y = np.zeros(len(w))
        y[neg] = a * np.sqrt(qb / qa)
        y[pos] = b
        x = V @ y
        # one Newton step onto the cone to clean up roundoff
        gx = g @ x
        x = x - (x @ gx) / (2.0 * (gx @ gx)) * gx
        out[k] = x / np.linalg.norm(x)
    return IsotropicSample(out, g)


@dataclass(frozen=True)
class ConeFitResult:
    proportional: bool
    c: Optional[float] = None
    witness: Optional[np.ndarray] = None
    violation: float = 0.0  # max over samples of |L(xi,xi)| / (||L|| ||xi||^2)


def cone_violations(L, vectors):
    L = np.asarray(L, dtype=float)
    norm = np.linalg.norm(L)
    vals = np.einsum("ki,ij,kj->k", vectors, L, vectors)
    sizes = np.sum(vectors**2, axis=1)
    if norm == 0:
        return np.zeros(len(vectors))
    return np.abs(vals) / (norm * sizes)


def cone_proportionality_fit(L, g, samples: IsotropicSample, tol=1e-9, tol_prop=1e-6) -> ConeFitResult:
    """Decide whether L = c g from the values of L on isotropic samples.

    If L vanishes on every sample, c = tr(g^-1 L)/n and ``L - c g`` must be
    negligible; otherwise the sample with the largest normalized value is
    returned as witness.
    """
    L = np.asarray(L, dtype=float)
    g = np.asarray(g, dtype=float)
    viol = cone_violations(L, samples.vectors)
    k = int(np.argmax(viol))
    if viol[k] > tol:
        return ConeFitResult(False, witness=samples.vectors[k].copy(), violation=float(viol[k]))
    n = len(g)
    c = float(np.trace(np.linalg.solve(g, L)) / n)
    defect = np.linalg.norm(L - c * g)
    if defect > tol_prop * max(np.linalg.norm(L), np.finfo(float).tiny):
        raise ConeUndersampledError(
            f"L vanishes on {len(samples)} cone samples but ||L - c g|| = {defect:.3e}; sample more of the cone"
        )
    return ConeFitResult(True, c=c, violation=float(viol[k]))


@dataclass(frozen=True)
class PointClass:
    kind: str  # "umbilic" | "quasi_umbilic" | "generic"
    alpha: float
    beta: float
    omega: Optional[np.ndarray]
    residual: float
    omega_norm2: float = float("nan")  # g^{-1}(omega, omega); ~0 flags an isotropic omega

    def reconstruct(self, g):
        """alpha g + beta omega omega^T (umbilic: beta = 0)."""
        out = self.alpha * np.asarray(g)
        if self.omega is not None:
            out = out + self.beta * np.outer(self.omega, self.omega)
        return out


def _canonical_covector(v):
    v = np.asarray(v, dtype=float)
    scale = np.max(np.abs(v))
    omega = v / scale
    first = omega[np.flatnonzero(np.abs(omega) > 1e-12)[0]]
    return omega * np.sign(first), scale


def classify_point(pg: PointGeometry, tol=1e-6) -> PointClass:
    g, h = pg.g, pg.h
    n = g.shape[-1]
    scale = float(np.max(np.abs(h)) + np.max(np.abs(g)))
    g_inv = np.linalg.inv(g)
    tr_h = float(np.trace(g_inv @ h))
    B = h - tr_h / n * g
    b_norm = float(np.max(np.abs(B)))
    if b_norm <= tol * scale:
        return PointClass("umbilic", tr_h / n, 0.0, None, b_norm)
    A = g_inv @ h
    candidates = sorted(set(np.real(np.linalg.eigvals(A)).round(14).tolist()) | {tr_h / n})
    best_alpha, best_s2 = None, np.inf
    for alpha in candidates:
        s = np.linalg.svd(A - alpha * np.eye(n), compute_uv=False)
        if s[1] < best_s2:
            best_alpha, best_s2 = alpha, s[1]
    if best_s2 > tol * scale:
        return PointClass("generic", float(best_alpha), float("nan"), None, float(best_s2))
    M = h - best_alpha * g
    M = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(M)
    k = int(np.argmax(np.abs(w)))
    omega, s = _canonical_covector(V[:, k])
    beta = float(w[k] * s**2)
    residual = float(np.max(np.abs(M - beta * np.outer(omega, omega))))
    return PointClass("quasi_umbilic", float(best_alpha), beta, omega, residual, float(omega @ g_inv @ omega))


@dataclass(frozen=True)
class DensityScan:
    kinds: tuple
    classes: tuple
    umbilic_fraction: float
    quasi_umbilic_fraction: float
    generic_fraction: float

    @property
    def nonquasi_umbilic_dense(self):
        """Grid proxy for the density condition of the global branch."""
        return self.generic_fraction == 1.0

    @property
    def nonumbilic_dense(self):
        """Grid proxy for the density condition of the local branch."""
        return self.umbilic_fraction == 0.0


def density_scan(patch: ImmersionPatch, grid=None, tol=1e-6, geometry: Optional[PointGeometry] = None) -> DensityScan:
    if geometry is None:
        if grid is None:
            grid = chart_grid(patch.domain)
        points = grid.points if hasattr(grid, "points") else np.atleast_2d(grid)
        geometry = point_geometry(patch, points)
    m = len(geometry.u)
    classes = tuple(classify_point(geometry.at(i), tol) for i in range(m))
    kinds = tuple(c.kind for c in classes)
    return DensityScan(
        kinds,
        classes,
        kinds.count("umbilic") / m,
        kinds.count("quasi_umbilic") / m,
        kinds.count("generic") / m,
    )
