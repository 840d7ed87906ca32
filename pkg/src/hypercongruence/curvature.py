"""Intrinsic curvature of an immersed patch.

Conventions (chart indices, batch axis first):

* ``dg[..., k, i, j] = d_k g_ij`` and higher derivatives prepend indices.
* ``Gamma[..., k, i, j]`` is the Christoffel symbol Gamma^k_ij.
* ``R[..., a, b, c, d] = g(R(e_a, e_b) e_c, e_d)`` so that
  ``R(x, y, y, x) = g(x,x) g(y,y) - g(x,y)^2`` on the unit sphere.
* ``S[b, c] = g^{ad} R[a, b, c, d]``; the unit n-sphere has S = (n-1) g.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .surface import (
    ImmersionPatch,
    Jet,
    _as_jet,
    _is_single,
    check_metric,
    normal_from_jet,
    sff_from_jet,
)


def metric_derivatives(jet: Jet, eta, order):
    """[g, dg, d2g, ...] up to ``order`` metric derivatives (needs a jet of order+1)."""
    d = jet.d
    if jet.order < order + 1:
        raise ValueError(f"need a jet of order {order + 1}")
    out = [np.einsum("...ia,a,...ja->...ij", d[1], eta, d[1])]
    if order >= 1:
        t = np.einsum("...kia,a,...ja->...kij", d[2], eta, d[1])
        out.append(t + np.swapaxes(t, -1, -2))
    if order >= 2:
        t = np.einsum("...lkia,a,...ja->...lkij", d[3], eta, d[1])
        t2 = np.einsum("...kia,a,...lja->...lkij", d[2], eta, d[2])
        s = t + t2
        out.append(s + np.swapaxes(s, -1, -2))
    if order >= 3:
        t = np.einsum("...plkia,a,...ja->...plkij", d[4], eta, d[1])
        t += np.einsum("...lkia,a,...pja->...plkij", d[3], eta, d[2])
        t += np.einsum("...pkia,a,...lja->...plkij", d[3], eta, d[2])
        t += np.einsum("...plia,a,...kja->...plkij", d[3], eta, d[2])
        out.append(t + np.swapaxes(t, -1, -2))
    return out


def _christoffel_first(dg):
    """Gamma_{ij,l} = (d_i g_jl + d_j g_il - d_l g_ij) / 2, stored as [..., i, j, l]."""
    return 0.5 * (
        np.einsum("...ijl->...ijl", dg)
        + np.einsum("...jil->...ijl", dg)
        - np.einsum("...lij->...ijl", dg)
    )


def christoffel_from_metric(g_inv, dg):
    return np.einsum("...kl,...ijl->...kij", g_inv, _christoffel_first(dg))


def christoffel(patch: ImmersionPatch, u):
    jet = _as_jet(patch, u, 2)
    g, dg = metric_derivatives(jet, patch.space.eta_diag, 1)
    check_metric(g, jet.u)
    G = christoffel_from_metric(np.linalg.inv(g), dg)
    return G[0] if _is_single(u) else G


@dataclass
class _Connection:
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    Gamma: np.ndarray
    dGamma: np.ndarray  # [..., a, k, i, j] = d_a Gamma^k_ij
    d2Gamma: Optional[np.ndarray] = None  # [..., b, a, k, i, j]
    d2g: Optional[np.ndarray] = None
    dg_inv: Optional[np.ndarray] = None


def _connection(mds, second=False):
    g, dg, d2g = mds[0], mds[1], mds[2]
    g_inv = np.linalg.inv(g)
    G1 = _christoffel_first(dg)
    dG1 = 0.5 * (
        d2g
        + np.einsum("...ajil->...aijl", d2g)
        - np.einsum("...alij->...aijl", d2g)
    )
    dg_inv = -np.einsum("...kp,...apq,...ql->...akl", g_inv, dg, g_inv)
    Gamma = np.einsum("...kl,...ijl->...kij", g_inv, G1)
    dGamma = np.einsum("...akl,...ijl->...akij", dg_inv, G1) + np.einsum("...kl,...aijl->...akij", g_inv, dG1)
    conn = _Connection(g, g_inv, dg, Gamma, dGamma, d2g=d2g, dg_inv=dg_inv)
    if second:
        d3g = mds[3]
        d2G1 = 0.5 * (
            d3g
            + np.einsum("...bajil->...baijl", d3g)
            - np.einsum("...balij->...baijl", d3g)
        )
        # d_b d_a g^{kl} = -(d_b g^-1 d_a g g^-1 + g^-1 d_b d_a g g^-1 + g^-1 d_a g d_b g^-1)
        d2g_inv = -(
            np.einsum("...bkp,...apq,...ql->...bakl", dg_inv, dg, g_inv)
            + np.einsum("...kp,...bapq,...ql->...bakl", g_inv, d2g, g_inv)
            + np.einsum("...kp,...apq,...bql->...bakl", g_inv, dg, dg_inv)
        )
        conn.d2Gamma = (
            np.einsum("...bakl,...ijl->...bakij", d2g_inv, G1)
            + np.einsum("...akl,...bijl->...bakij", dg_inv, dG1)
            + np.einsum("...bkl,...aijl->...bakij", dg_inv, dG1)
            + np.einsum("...kl,...baijl->...bakij", g_inv, d2G1)
        )
    return conn


def _riemann_up(Gamma, dGamma):
    """R^r_{s m v} = d_m G^r_{v s} - d_v G^r_{m s} + G^r_{m l} G^l_{v s} - G^r_{v l} G^l_{m s}."""
    t = np.einsum("...mrvs->...rsmv", dGamma)
    q = np.einsum("...rml,...lvs->...rsmv", Gamma, Gamma)
    return t - np.swapaxes(t, -1, -2) + q - np.swapaxes(q, -1, -2)


def _riemann_up_derivative(conn):
    """d_k R^r_{s m v}, stored as [..., k, r, s, m, v]."""
    G, dG, d2G = conn.Gamma, conn.dGamma, conn.d2Gamma
    t = np.einsum("...kmrvs->...krsmv", d2G)
    q = np.einsum("...krml,...lvs->...krsmv", dG, G) + np.einsum("...rml,...klvs->...krsmv", G, dG)
    return t - np.swapaxes(t, -1, -2) + q - np.swapaxes(q, -1, -2)


def lower_riemann(g, Rup):
    """R[a,b,c,d] = g_{d r} R^r_{c a b}."""
    return np.einsum("...dr,...rcab->...abcd", g, Rup)


def ricci_scalar(R, g_inv):
    """Ricci tensor and scalar curvature from a (0,4) Riemann tensor."""
    S = np.einsum("...ad,...abcd->...bc", g_inv, R)
    tau = np.einsum("...bc,...bc->...", g_inv, S)
    return S, tau


def phi_op(T, g):
    """phi(T)(x,y,z,u) = g(x,u)T(y,z) - g(x,z)T(y,u) + g(y,z)T(x,u) - g(y,u)T(x,z)."""
    a = np.einsum("...xu,...yz->...xyzu", g, T)
    b = np.einsum("...xz,...yu->...xyzu", g, T)
    c = np.einsum("...yz,...xu->...xyzu", g, T)
    d = np.einsum("...yu,...xz->...xyzu", g, T)
    return a - b + c - d


def pi1(g):
    return 0.5 * phi_op(g, g)


def wedge_square(h):
    """(h ^ h)(x,y,z,u) = h(x,u)h(y,z) - h(x,z)h(y,u), the Gauss-equation tensor."""
    return np.einsum("...xu,...yz->...xyzu", h, h) - np.einsum("...xz,...yu->...xyzu", h, h)


def weyl_tensor(R, S, tau, g):
    n = g.shape[-1]
    if n < 3:
        raise ValueError("the Weyl tensor needs dimension >= 3")
    tau = np.asarray(tau)[..., None, None, None, None]
    return R - phi_op(S, g) / (n - 2) + tau * pi1(g) / ((n - 1) * (n - 2))


def tensor_norm(T, axes=4):
    """Frobenius norm over the trailing ``axes`` indices."""
    return np.sqrt(np.sum(T**2, axis=tuple(range(-axes, 0))))


def curvature_floor(g):
    return 1e-12 * (1.0 + np.max(np.abs(g), axis=(-2, -1)) ** 4)


@dataclass(frozen=True)
class CurvaturePack:
    """Curvature data at a batch of points (leading axis) or one point.

    ``eps_gauss`` is the sign e with R = e (h ^ h), 0 where R is negligible.
    ``cotton3`` is the antisymmetrized covariant derivative of S - tau/4 g,
    stored as [..., x, y, z] = (nabla_x P)(y, z) - (nabla_y P)(x, z); only
    computed when n = 3.
    """

    u: np.ndarray
    g: np.ndarray
    Gamma: np.ndarray
    R: np.ndarray
    S: np.ndarray
    tau: np.ndarray
    C: np.ndarray
    R_gauss: np.ndarray
    eps_gauss: np.ndarray
    eps_N: np.ndarray
    h: np.ndarray
    cotton3: Optional[np.ndarray] = None

    def at(self, i):
        vals = {f: getattr(self, f) for f in self.__dataclass_fields__}
        return CurvaturePack(**{k: (None if v is None else v[i]) for k, v in vals.items()})

    @property
    def R_norm(self):
        return tensor_norm(self.R)

    @property
    def gauss_residual(self):
        """||R - e (h ^ h)|| / ||R|| with the recorded sign (floor-protected)."""
        eps = np.where(self.eps_gauss == 0, 1, self.eps_gauss)[..., None, None, None, None]
        diff = tensor_norm(self.R - eps * self.R_gauss)
        return diff / np.maximum(self.R_norm, curvature_floor(self.g))


def _gauss_sign(R, Rg, g):
    dot = np.sum(R * Rg, axis=(-4, -3, -2, -1))
    small = tensor_norm(Rg) <= curvature_floor(g)
    return np.where(small, 0, np.sign(dot)).astype(int)


def _cotton3(conn, R, Rup, dRup, S, tau):
    g, g_inv, dg, Gamma, dg_inv = conn.g, conn.g_inv, conn.dg, conn.Gamma, conn.dg_inv
    # d_k R[a,b,c,d] = d_k g_{dr} R^r_{cab} + g_{dr} d_k R^r_{cab}
    dR = np.einsum("...kdr,...rcab->...kabcd", dg, Rup) + np.einsum("...dr,...krcab->...kabcd", g, dRup)
    dS = np.einsum("...kad,...abcd->...kbc", dg_inv, R) + np.einsum("...ad,...kabcd->...kbc", g_inv, dR)
    dtau = np.einsum("...kbc,...bc->...k", dg_inv, S) + np.einsum("...bc,...kbc->...k", g_inv, dS)
    P = S - (tau / 4.0)[..., None, None] * g
    dP = dS - (dtau / 4.0)[..., None, None] * g[..., None, :, :] - (tau / 4.0)[..., None, None, None] * dg
    # nabla_k P_ij = d_k P_ij - Gamma^l_ki P_lj - Gamma^l_kj P_il
    nP = dP - np.einsum("...lki,...lj->...kij", Gamma, P) - np.einsum("...lkj,...il->...kij", Gamma, P)
    return nP - np.swapaxes(nP, -3, -2)


def curvature_from_jet(jet: Jet, space, cotton: Optional[bool] = None) -> CurvaturePack:
    eta = space.eta_diag
    n = jet.d[1].shape[-2]
    if cotton is None:
        cotton = n == 3
    order = 3 if cotton else 2
    mds = metric_derivatives(jet, eta, order)
    check_metric(mds[0], jet.u)
    conn = _connection(mds, second=cotton)
    Rup = _riemann_up(conn.Gamma, conn.dGamma)
    R = lower_riemann(conn.g, Rup)
    S, tau = ricci_scalar(R, conn.g_inv)
    C = weyl_tensor(R, S, tau, conn.g) if n >= 3 else np.zeros_like(R)
    N, eps_N = normal_from_jet(jet, space)
    h = sff_from_jet(jet, N, eta)
    Rg = wedge_square(h)
    eps = _gauss_sign(R, Rg, conn.g)
    c3 = None
    if cotton:
        c3 = _cotton3(conn, R, Rup, _riemann_up_derivative(conn), S, tau)
    return CurvaturePack(jet.u, conn.g, conn.Gamma, R, S, tau, C, Rg, eps, eps_N.astype(int), h, c3)


def curvature_pack(patch: ImmersionPatch, u, cotton: Optional[bool] = None) -> CurvaturePack:
    order = 4 if (cotton or (cotton is None and patch.n == 3)) else 3
    pack = curvature_from_jet(_as_jet(patch, u, order), patch.space, cotton)
    return pack.at(0) if _is_single(u) else pack


def riemann(patch: ImmersionPatch, u, method="intrinsic"):
    """(0,4) Riemann tensor.

    ``intrinsic`` builds it from the Christoffel symbols; ``gauss`` returns
    e (h ^ h) with the sign e that makes the two agree, as a pair (R, e).
    """
    pack = curvature_pack(patch, u, cotton=False)
    if method == "intrinsic":
        return pack.R
    if method == "gauss":
        eps = pack.eps_gauss
        e = np.where(eps == 0, 1, eps)
        return np.asarray(e)[..., None, None, None, None] * pack.R_gauss, eps
    raise ValueError(f"unknown method {method!r}")


def weyl(patch: ImmersionPatch, u):
    if patch.n < 3:
        raise ValueError("the Weyl tensor needs n >= 3")
    return curvature_pack(patch, u, cotton=False).C


def codazzi_from_jet(jet: Jet, space):
    """(nabla_k h)(i, j) - (nabla_i h)(k, j) as [..., k, i, j], plus the point scale."""
    eta = space.eta_diag
    g, dg = metric_derivatives(jet, eta, 1)
    check_metric(g, jet.u)
    Gamma = christoffel_from_metric(np.linalg.inv(g), dg)
    N, _, dN = normal_from_jet(jet, space, derivative=True)
    h = sff_from_jet(jet, N, eta)
    # d_k h_ij = eta(d_kij f, N) + eta(d_ij f, d_k N)
    dh = np.einsum("...kija,a,...a->...kij", jet.d[3], eta, N) + np.einsum("...ija,a,...ka->...kij", jet.d[2], eta, dN)
    nh = dh - np.einsum("...lki,...lj->...kij", Gamma, h) - np.einsum("...lkj,...il->...kij", Gamma, h)
    res = nh - np.swapaxes(nh, -3, -2)
    scale = np.max(np.abs(h), axis=(-2, -1)) + np.max(np.abs(g), axis=(-2, -1))
    return res, scale


def codazzi_residual(patch: ImmersionPatch, u):
    jet = _as_jet(patch, u, 3)
    res, _ = codazzi_from_jet(jet, patch.space)
    return res[0] if _is_single(u) else res


def sff_derivative_from_jet(jet: Jet, space):
    """h and d_k h_ij ([..., k, i, j]) with the normal's own derivative."""
    eta = space.eta_diag
    N, _, dN = normal_from_jet(jet, space, derivative=True)
    h = sff_from_jet(jet, N, eta)
    dh = np.einsum("...kija,a,...a->...kij", jet.d[3], eta, N) + np.einsum("...ija,a,...ka->...kij", jet.d[2], eta, dN)
    return h, dh


@dataclass(frozen=True)
class FlatnessVerdict:
    verdict: str  # "flat_conformally" | "not" | "indeterminate"
    max_ratio: float
    tol: float
    test: str  # "weyl" | "cotton"

    def __str__(self):
        return self.verdict


def conformal_flatness(patch: ImmersionPatch, grid, tol=1e-6) -> FlatnessVerdict:
    """Decide conformal flatness on a grid.

    n > 3 uses the Weyl tensor, n = 3 the antisymmetrized covariant
    derivative of S - tau/4 g; both are measured relative to ||R||.
    """
    n = patch.n
    if n < 3:
        raise ValueError("conformal flatness test needs n >= 3")
    points = grid.points if hasattr(grid, "points") else np.atleast_2d(grid)
    pack = curvature_pack(patch, points, cotton=(n == 3))
    return flatness_from_pack(pack, tol)


def flatness_from_pack(pack: CurvaturePack, tol=1e-6) -> FlatnessVerdict:
    n = pack.g.shape[-1]
    if n == 3:
        test_norm, name = tensor_norm(pack.cotton3, 3), "cotton"
    else:
        test_norm, name = tensor_norm(pack.C), "weyl"
    floor = curvature_floor(pack.g)
    R_norm = pack.R_norm
    if np.all(R_norm <= floor) and np.all(test_norm <= floor):
        return FlatnessVerdict("indeterminate", 0.0, tol, name)
    ratio = float(np.max(test_norm / np.maximum(R_norm, floor)))
    return FlatnessVerdict("flat_conformally" if ratio <= tol else "not", ratio, tol, name)
