"""Extrinsic geometry of an immersed chart patch f: U -> R^{n+1}_s.

All per-point routines accept a single chart point of shape ``(n,)`` or a
batch of shape ``(m, n)`` and return arrays with the matching leading axis.
Derivatives of the immersion are exact (symbolic) up to order 4.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .ambient import AmbientSpace
from .exprlang import differentiate, evaluate_many
from .exprlang.scene import SurfaceSpec

MAX_ORDER = 4


class GeometryError(Exception):
    """A standing nondegeneracy hypothesis fails at some chart point."""

    def __init__(self, message, u=None):
        super().__init__(message)
        self.u = None if u is None else np.asarray(u)


class DegenerateMetricError(GeometryError):
    pass


class IsotropicNormalError(GeometryError):
    pass


class IsotropicArgumentError(GeometryError):
    pass


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid of chart points; ``points`` is in C order of ``shape``."""

    axes: tuple
    points: np.ndarray

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    def __len__(self):
        return len(self.points)


def chart_grid(domain, per_axis=5, shrink=0.1) -> Grid:
    """``per_axis`` points per chart axis, pulled in by ``shrink`` of the width at each end."""
    if per_axis < 1:
        raise ValueError("per_axis must be positive")
    axes = []
    for lo, hi in domain:
        w = hi - lo
        a, b = lo + shrink * w, hi - shrink * w
        axes.append(np.linspace(a, b, per_axis) if per_axis > 1 else np.array([(a + b) / 2]))
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    return Grid(tuple(axes), points)


@dataclass(frozen=True)
class Jet:
    """Immersion derivatives at a batch of points.

    ``d[k]`` has shape ``(m,) + (n,)*k + (n+1,)`` and is symmetric in the
    chart axes; ``d[0]`` is the position itself.
    """

    u: np.ndarray
    d: tuple

    @property
    def order(self):
        return len(self.d) - 1


class ImmersionPatch:
    """A chart patch given by n+1 component expressions over n chart variables."""

    def __init__(self, space: AmbientSpace, chart_vars, components, domain, name=""):
        chart_vars = tuple(chart_vars)
        components = tuple(components)
        if len(chart_vars) != space.n:
            raise ValueError(f"{len(chart_vars)} chart variables for a hypersurface of dimension {space.n}")
        if len(components) != space.dim_total:
            raise ValueError(f"{len(components)} components in R^{space.dim_total}")
        self.space = space
        self.chart_vars = chart_vars
        self.components = components
        self.domain = tuple((float(lo), float(hi)) for lo, hi in domain)
        self.name = name
        self._derivs = {(): components}

    @classmethod
    def from_spec(cls, space: AmbientSpace, spec: SurfaceSpec):
        return cls(space, spec.chart_vars, spec.embed, spec.domain, name=spec.name)

    @property
    def n(self):
        return len(self.chart_vars)

    def derivative_exprs(self, multi):
        """Component expressions of the mixed partial indexed by ``multi``."""
        key = tuple(sorted(multi))
        if len(key) > MAX_ORDER:
            raise ValueError(f"derivative order {len(key)} exceeds {MAX_ORDER}")
        got = self._derivs.get(key)
        if got is None:
            parent = self.derivative_exprs(key[:-1])
            name = self.chart_vars[key[-1]]
            got = tuple(differentiate(e, name) for e in parent)
            self._derivs[key] = got
        return got

    def jet(self, u, order=2) -> Jet:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        m, n = u.shape
        if n != self.n:
            raise ValueError(f"chart point of length {n}, expected {self.n}")
        D = self.space.dim_total
        keys = [k for r in range(order + 1) for k in itertools.combinations_with_replacement(range(n), r)]
        exprs = [e for k in keys for e in self.derivative_exprs(k)]
        env = {v: u[:, i] for i, v in enumerate(self.chart_vars)}
        with np.errstate(all="ignore"):
            vals = evaluate_many(exprs, env)
        table = {}
        for j, k in enumerate(keys):
            block = vals[j * D:(j + 1) * D]
            table[k] = np.stack([np.broadcast_to(np.asarray(v, dtype=float), (m,)) for v in block], axis=-1)
        d = []
        for r in range(order + 1):
            arr = np.empty((m,) + (n,) * r + (D,))
            for idx in itertools.product(range(n), repeat=r):
                arr[(slice(None),) + idx] = table[tuple(sorted(idx))]
            d.append(arr)
        return Jet(u, tuple(d))

    def __call__(self, u):
        return _squeeze(u, self.jet(u, 0).d[0])

    def __repr__(self):
        return f"ImmersionPatch({self.name!r}, n={self.n}, s={self.space.neg_count})"


def _is_single(u):
    return np.asarray(u).ndim == 1


def _squeeze(u, arr):
    return arr[0] if _is_single(u) else arr


def _as_jet(patch, u, order):
    if isinstance(u, Jet):
        if u.order < order:
            return patch.jet(u.u, order)
        return u
    return patch.jet(u, order)


def metric_from_jet(jet: Jet, eta_diag) -> np.ndarray:
    d1 = jet.d[1]
    return np.einsum("...ia,a,...ja->...ij", d1, eta_diag, d1)


def check_metric(g, u, tol=1e-10):
    """Raise DegenerateMetricError where |det g| is negligible relative to |g|^n."""
    n = g.shape[-1]
    det = np.linalg.det(g)
    scale = np.max(np.abs(g), axis=(-2, -1)) ** n
    bad = ~(np.abs(det) > tol * scale)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DegenerateMetricError(f"induced metric is degenerate at u={u[i].tolist()} (det={det[i]:.3e})", u[i])
    return det


def induced_metric(patch: ImmersionPatch, u, tol=1e-10):
    jet = _as_jet(patch, u, 1)
    g = metric_from_jet(jet, patch.space.eta_diag)
    check_metric(g, jet.u, tol)
    return _squeeze(u, g) if not isinstance(u, Jet) else g


def _cofactor_covector(J):
    """w_a = (-1)^a det(J with column a removed); w annihilates every row of J."""
    D = J.shape[-1]
    out = np.empty(J.shape[:-2] + (D,))
    for a in range(D):
        minor = np.delete(J, a, axis=-1)
        out[..., a] = (-1) ** a * np.linalg.det(minor)
    return out


def normal_from_jet(jet: Jet, space: AmbientSpace, derivative=False, tol=1e-10):
    """Unit normal, its sign eps_N = eta(N, N), and optionally dN[k] = d_k N.

    N is oriented by the chart: it is the normalized eta-dual of the
    cofactor covector of (d_1 f, ..., d_n f), so it varies smoothly over
    the patch.
    """
    eta = space.eta_diag
    J = jet.d[1]
    w = _cofactor_covector(J)
    N_raw = w * eta
    q = np.einsum("...a,a,...a->...", N_raw, eta, N_raw)
    size = np.sum(N_raw**2, axis=-1)
    bad = ~(np.abs(q) > tol * size)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise IsotropicNormalError(f"normal is isotropic at u={jet.u[i].tolist()}", jet.u[i])
    eps = np.sign(q)
    rho = np.sqrt(np.abs(q))
    N = N_raw / rho[..., None]
    if not derivative:
        return N, eps
    if jet.order < 2:
        raise ValueError("normal derivative needs a jet of order >= 2")
    n = J.shape[-2]
    d2 = jet.d[2]
    dN = np.empty(J.shape[:-2] + (n,) + J.shape[-1:])
    for k in range(n):
        dw = np.zeros_like(w)
        for i in range(n):
            Jk = J.copy()
            Jk[..., i, :] = d2[..., k, i, :]
            dw += _cofactor_covector(Jk)
        dN_raw = dw * eta
        drho = eps * np.einsum("...a,a,...a->...", N_raw, eta, dN_raw) / rho
        dN[..., k, :] = dN_raw / rho[..., None] - N_raw * (drho / rho**2)[..., None]
    return N, eps, dN


def unit_normal(patch: ImmersionPatch, u):
    jet = _as_jet(patch, u, 1)
    check_metric(metric_from_jet(jet, patch.space.eta_diag), jet.u)
    N, eps = normal_from_jet(jet, patch.space)
    if _is_single(u):
        return N[0], int(eps[0])
    return N, eps.astype(int)


def sff_from_jet(jet: Jet, N, eta_diag):
    return np.einsum("...ija,a,...a->...ij", jet.d[2], eta_diag, N)


def second_fundamental_form(patch: ImmersionPatch, u):
    jet = _as_jet(patch, u, 2)
    check_metric(metric_from_jet(jet, patch.space.eta_diag), jet.u)
    N, _ = normal_from_jet(jet, patch.space)
    return _squeeze(u, sff_from_jet(jet, N, patch.space.eta_diag))


@dataclass(frozen=True)
class PointGeometry:
    """Metric, normal and second fundamental form at one point or a batch."""

    u: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    N: np.ndarray
    eps_N: np.ndarray
    h: np.ndarray
    B: np.ndarray
    tr_h: np.ndarray

    @property
    def n(self):
        return self.g.shape[-1]

    @property
    def shape_operator(self):
        return self.g_inv @ self.h

    @property
    def scale(self):
        """max|h| + max|g|, the reference size for classification tolerances."""
        return np.max(np.abs(self.h), axis=(-2, -1)) + np.max(np.abs(self.g), axis=(-2, -1))

    def at(self, i):
        """The i-th point of a batch."""
        return PointGeometry(*(getattr(self, f)[i] for f in self.__dataclass_fields__))


def geometry_from_jet(jet: Jet, space: AmbientSpace) -> PointGeometry:
    eta = space.eta_diag
    g = metric_from_jet(jet, eta)
    check_metric(g, jet.u)
    g_inv = np.linalg.inv(g)
    N, eps = normal_from_jet(jet, space)
    h = sff_from_jet(jet, N, eta)
    n = g.shape[-1]
    tr_h = np.einsum("...ij,...ji->...", g_inv, h)
    B = h - (tr_h / n)[..., None, None] * g
    return PointGeometry(jet.u, g, g_inv, N, eps.astype(int), h, B, tr_h)


def point_geometry(patch: ImmersionPatch, u) -> PointGeometry:
    pg = geometry_from_jet(_as_jet(patch, u, 2), patch.space)
    return pg.at(0) if _is_single(u) else pg


def bending(patch: ImmersionPatch, u, x, tol=1e-12):
    """h(x, x) / g(x, x) for a nonisotropic chart tangent vector x at a single point u."""
    pg = point_geometry(patch, np.asarray(u, dtype=float))
    return bending_from(pg.g, pg.h, x, tol)


def bending_from(g, h, x, tol=1e-12):
    x = np.asarray(x, dtype=float)
    gxx = x @ g @ x
    if not abs(gxx) > tol * np.max(np.abs(g)) * (x @ x):
        raise IsotropicArgumentError(f"bending is undefined on the isotropic vector {x.tolist()}")
    return float((x @ h @ x) / gxx)
