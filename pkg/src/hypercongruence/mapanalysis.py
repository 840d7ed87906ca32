"""Maps between hypersurface patches: conformal profile, bending checks,
the curvature identities satisfied by bending-preserving maps, and the
congruence decision with ambient motion recovery."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .ambient import Motion, inner, pseudo_orthogonality_defect
from .classify import DensityScan, density_scan, sample_isotropic
from .curvature import (
    CurvaturePack,
    FlatnessVerdict,
    curvature_floor,
    curvature_from_jet,
    flatness_from_pack,
    metric_derivatives,
    phi_op,
    pi1,
    sff_derivative_from_jet,
    tensor_norm,
)
from .exprlang import differentiate, evaluate_many, substitute
from .exprlang.scene import SceneModel
from .surface import (
    GeometryError,
    Grid,
    ImmersionPatch,
    chart_grid,
    check_metric,
    geometry_from_jet,
    metric_from_jet,
)


class ConformalityError(GeometryError):
    """The map is not conformal on the grid."""

    def __init__(self, message, u=None, residual=float("nan")):
        super().__init__(message, u)
        self.residual = residual


class SignFlipError(ConformalityError):
    """f*g_bar = c g with c changing sign across the grid."""


class RankDeficientError(GeometryError):
    """Sample points lie in a proper affine subspace; the motion is not determined."""


class PatchMap:
    """A chart-level map F between two patches; the hypersurface map is f_bar o F o f^-1."""

    def __init__(self, source: ImmersionPatch, target: ImmersionPatch, rule, name=""):
        rule = tuple(rule)
        if source.space != target.space:
            raise ValueError("source and target live in different ambient spaces")
        if len(rule) != target.n:
            raise ValueError(f"{len(rule)} rule components for a target with {target.n} chart variables")
        self.source = source
        self.target = target
        self.rule = rule
        self.name = name
        self._drule = tuple(tuple(differentiate(e, v) for v in source.chart_vars) for e in rule)
        self._composite = None

    @classmethod
    def from_scene(cls, scene: SceneModel, name: str) -> "PatchMap":
        spec = scene.maps[name]
        src = ImmersionPatch.from_spec(scene.space, scene.surfaces[spec.source])
        dst = ImmersionPatch.from_spec(scene.space, scene.surfaces[spec.target])
        return cls(src, dst, spec.rule, name=name)

    @property
    def n(self):
        return self.source.n

    @property
    def space(self):
        return self.source.space

    def _env(self, u):
        return {v: u[:, i] for i, v in enumerate(self.source.chart_vars)}

    def __call__(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        vals = evaluate_many(self.rule, self._env(u))
        return np.stack([np.broadcast_to(np.asarray(v, float), (len(u),)) for v in vals], axis=-1)

    def jacobian(self, u):
        """dF[..., a, i] = d F^a / d u^i."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        flat = [e for row in self._drule for e in row]
        vals = evaluate_many(flat, self._env(u))
        n = self.n
        arr = np.stack([np.broadcast_to(np.asarray(v, float), (len(u),)) for v in vals], axis=-1)
        J = arr.reshape(len(u), n, n)
        bad = np.abs(np.linalg.det(J)) <= 1e-12 * np.max(np.abs(J), axis=(1, 2)) ** n
        if np.any(bad):
            i = int(np.argmax(bad))
            raise GeometryError(f"map {self.name!r} is singular at u={u[i].tolist()}", u[i])
        return J

    def composite(self) -> ImmersionPatch:
        """The target immersion expressed in the source chart, f_bar o F."""
        if self._composite is None:
            mapping = dict(zip(self.target.chart_vars, self.rule))
            comps = [substitute(e, mapping) for e in self.target.components]
            self._composite = ImmersionPatch(
                self.space, self.source.chart_vars, comps, self.source.domain, name=f"{self.target.name}∘{self.name}"
            )
        return self._composite


def pullback2(T, dF):
    return np.einsum("...ab,...ai,...bj->...ij", T, dF, dF)


def pullback4(T, dF):
    return np.einsum("...abcd,...ai,...bj,...ck,...dl->...ijkl", T, dF, dF, dF, dF, optimize=True)


def pullback_metric(pmap: PatchMap, u):
    """(f* g_bar)(x, y) = g_bar(dF x, dF y) evaluated at F(u)."""
    single = np.asarray(u).ndim == 1
    u = np.atleast_2d(np.asarray(u, dtype=float))
    Fu = pmap(u)
    jet = pmap.target.jet(Fu, 1)
    gbar = metric_from_jet(jet, pmap.space.eta_diag)
    check_metric(gbar, Fu)
    out = pullback2(gbar, pmap.jacobian(u))
    return out[0] if single else out


# -- conformal profile -------------------------------------------------------


def _fit_matrix(x, window=5, degree=3):
    """Rows give d/dx at each node from a local least-squares polynomial."""
    K = len(x)
    if K < 2:
        return np.zeros((K, K))
    w = min(window, K)
    deg = min(degree, w - 1)
    D = np.zeros((K, K))
    for i in range(K):
        lo = min(max(0, i - w // 2), K - w)
        idx = np.arange(lo, lo + w)
        t = x[idx] - x[i]
        V = np.vander(t, deg + 1, increasing=True)
        coef_map = np.linalg.pinv(V)  # coefficients as linear maps of values
        D[i, idx] = coef_map[1]
    return D


def _axis_apply(D, arr, axis):
    return np.moveaxis(np.tensordot(D, arr, axes=([1], [axis])), 0, axis)


def fitted_derivatives(values, grid: Grid, second=False):
    """Gradient (and Hessian) of a grid function via per-axis local cubic fits."""
    shape = grid.shape
    n = len(shape)
    f = np.asarray(values).reshape(shape)
    mats = [_fit_matrix(a) for a in grid.axes]
    grads = [_axis_apply(mats[k], f, k) for k in range(n)]
    grad = np.stack([g.ravel() for g in grads], axis=-1)
    if not second:
        return grad
    hess = np.empty((len(grid), n, n))
    for k in range(n):
        for l in range(k, n):
            hkl = _axis_apply(mats[l], grads[k], l).ravel()
            hess[:, k, l] = hess[:, l, k] = hkl
    return grad, hess


@dataclass(frozen=True)
class ConformalProfile:
    """Per-grid-point conformal data of a map; arrays have the grid as leading axis."""

    grid: Grid
    eps: np.ndarray
    sigma: np.ndarray
    dsigma: np.ndarray  # covector d sigma
    grad_sigma: np.ndarray  # vector g^-1 d sigma
    grad_sigma_norm2: np.ndarray
    lam: np.ndarray
    dlam: np.ndarray
    Q: np.ndarray
    h_sign: np.ndarray  # orientation of the target normal realizing the fit
    scale: np.ndarray
    R_norm: np.ndarray
    eps_N: np.ndarray
    eps_N_target: np.ndarray
    residual_conformal: np.ndarray
    residual_sff: np.ndarray
    residual_skew: np.ndarray
    residual_gradient: np.ndarray
    residual_curvature_shift: np.ndarray  # nan where residual_sff exceeds sff_tol
    residual_conformal_curvature: np.ndarray
    sff_tol: float
    derivatives: str
    extras: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def curvature_shift_applicable(self):
        return ~np.isnan(self.residual_curvature_shift)

    def maxima(self):
        def mx(a):
            a = np.asarray(a)
            a = a[~np.isnan(a)]
            return float(np.max(a)) if a.size else float("nan")

        return {
            "residual_conformal": mx(self.residual_conformal),
            "residual_sff": mx(self.residual_sff),
            "residual_skew": mx(self.residual_skew),
            "residual_gradient": mx(self.residual_gradient),
            "residual_curvature_shift": mx(self.residual_curvature_shift),
            "residual_conformal_curvature": mx(self.residual_conformal_curvature),
        }


@dataclass(frozen=True)
class _MapData:
    """Source and pulled-back target data at a batch of source points."""

    u: np.ndarray
    dF: np.ndarray
    src_jet: object
    src: object  # PointGeometry
    src_curv: CurvaturePack
    tgt_curv: CurvaturePack
    pull_g: np.ndarray
    pull_h: np.ndarray  # with the target's own normal orientation
    pull_R: np.ndarray


def _map_data(pmap: PatchMap, u) -> _MapData:
    u = np.atleast_2d(np.asarray(u, dtype=float))
    dF = pmap.jacobian(u)
    sj = pmap.source.jet(u, 3)
    src = geometry_from_jet(sj, pmap.space)
    src_curv = curvature_from_jet(sj, pmap.space, cotton=False)
    Fu = pmap(u)
    tj = pmap.target.jet(Fu, 3)
    tgt = geometry_from_jet(tj, pmap.space)
    tgt_curv = curvature_from_jet(tj, pmap.space, cotton=False)
    return _MapData(
        u, dF, sj, src, src_curv, tgt_curv,
        pullback2(tgt.g, dF), pullback2(tgt.h, dF), pullback4(tgt_curv.R, dF),
    )


def _trace(g_inv, T):
    return np.einsum("...ij,...ji->...", g_inv, T)


def _proportionality(P, g, g_inv):
    n = g.shape[-1]
    c = _trace(g_inv, P) / n
    return c, P - c[..., None, None] * g


def _maxabs(T, axes):
    return np.max(np.abs(T), axis=tuple(range(-axes, 0)))


def _choose_orientation(data: _MapData, eps, sigma, scale, tol):
    """Orientation s of the target normal minimizing the defect of f*h_bar against h + lambda g, then lambda."""
    g, g_inv, h = data.src.g, data.src.g_inv, data.src.h
    k = (eps * np.exp(-2 * sigma))[..., None, None]
    cands = []
    for s in (1.0, -1.0):
        P = k * s * data.pull_h - h
        lam, defect = _proportionality(P, g, g_inv)
        cands.append((_maxabs(defect, 2) / scale, lam))
    (r1, l1), (r2, l2) = cands
    near_tie = np.abs(r1 - r2) <= tol
    pick_second = np.where(near_tie, np.abs(l2) < np.abs(l1), r2 < r1)
    s = np.where(pick_second, -1.0, 1.0)
    return s, np.where(pick_second, l2, l1), np.where(pick_second, r2, r1)


def conformal_profile(
    pmap: PatchMap, grid: Grid, tol=1e-7, derivatives="fit", sff_tol=None
) -> ConformalProfile:
    """Extract (eps, sigma, lambda, Q) on ``grid`` and evaluate the residuals
    of the conformal curvature identities.

    Raises ConformalityError (with the worst point) if f*g_bar is not
    proportional to g within ``tol`` somewhere, SignFlipError if the sign of
    the factor changes.  ``derivatives`` selects "fit" (per-axis local
    cubic fits of sigma and lambda) or "exact" (symbolic, through the
    composite immersion).
    """
    if derivatives not in ("fit", "exact"):
        raise ValueError(f"unknown derivative route {derivatives!r}")
    if sff_tol is None:
        sff_tol = tol
    data = _map_data(pmap, grid.points)
    g, g_inv, h = data.src.g, data.src.g_inv, data.src.h
    scale = data.src.scale

    c, defect = _proportionality(data.pull_g, g, g_inv)
    res_conf = np.linalg.norm(defect, axis=(-2, -1)) / np.linalg.norm(data.pull_g, axis=(-2, -1))
    worst = int(np.argmax(res_conf))
    if not res_conf[worst] <= tol:
        raise ConformalityError(
            f"map {pmap.name!r} is not conformal at u={grid.points[worst].tolist()} "
            f"(proportionality residual {res_conf[worst]:.3e})",
            grid.points[worst],
            float(res_conf[worst]),
        )
    floor = 1e-12 * np.max(np.abs(data.pull_g), axis=(-2, -1))
    if np.any(np.abs(c) <= floor):
        i = int(np.argmax(np.abs(c) <= floor))
        raise ConformalityError(f"conformal factor vanishes at u={grid.points[i].tolist()}", grid.points[i])
    eps = np.sign(c)
    if np.any(eps != eps[0]):
        i = int(np.argmax(eps != eps[0]))
        raise SignFlipError(f"conformal sign flips at u={grid.points[i].tolist()}", grid.points[i])
    sigma = 0.5 * np.log(np.abs(c))

    s, lam, res_sff = _choose_orientation(data, eps, sigma, scale, tol)

    extras = {}
    if derivatives == "fit":
        dsigma, hess = fitted_derivatives(sigma, grid, second=True)
        dlam = fitted_derivatives(lam, grid)
    else:
        dsigma, hess, dlam = _exact_derivatives(pmap, data, c, eps, sigma, s)
    Gamma = data.src_curv.Gamma
    grad = np.einsum("...ij,...j->...i", g_inv, dsigma)
    norm2 = np.einsum("...i,...i->...", dsigma, grad)
    hess_cov = hess - np.einsum("...kij,...k->...ij", Gamma, dsigma)
    Q = np.einsum("...i,...j->...ij", dsigma, dsigma) - hess_cov - 0.5 * norm2[..., None, None] * g

    res_skew, res_grad = _gradient_constraints(dsigma, dlam, data.src.g, data.src.g_inv, data.src.B, scale)

    R = data.src_curv.R
    R_norm = tensor_norm(R)
    rfloor = np.maximum(R_norm, np.maximum(curvature_floor(g), 1e-9 * scale**2))
    e2s = np.exp(2 * sigma)[..., None, None, None, None]
    cc_defect = data.pull_R - eps[..., None, None, None, None] * e2s * (R + phi_op(Q, g))
    res_cc = tensor_norm(cc_defect) / rfloor

    eN = data.src_curv.eps_N
    eNt = data.tgt_curv.eps_N
    lam4 = lam[..., None, None, None, None]
    predicted = (eNt[..., None, None, None, None] * e2s**2) * (
        eN[..., None, None, None, None] * R + lam4 * phi_op(h, g) + lam4**2 * pi1(g)
    )
    res_shift = tensor_norm(data.pull_R - predicted) / rfloor
    res_shift = np.where(res_sff <= sff_tol, res_shift, np.nan)

    extras.update(pull_R=data.pull_R, g=data.src.g, g_inv=data.src.g_inv, B=data.src.B)
    return ConformalProfile(
        grid=grid, eps=eps.astype(int), sigma=sigma, dsigma=dsigma, grad_sigma=grad,
        grad_sigma_norm2=norm2, lam=lam, dlam=dlam, Q=Q, h_sign=s.astype(int), scale=scale,
        R_norm=R_norm, eps_N=eN, eps_N_target=eNt,
        residual_conformal=res_conf, residual_sff=res_sff, residual_skew=res_skew,
        residual_gradient=res_grad, residual_curvature_shift=res_shift, residual_conformal_curvature=res_cc,
        sff_tol=float(sff_tol), derivatives=derivatives, extras=extras,
    )


def _gradient_constraints(dsigma, dlam, g, g_inv, B, scale):
    """Normalized violations of
    d sigma(X) B(Y, Z) - d sigma(Y) B(X, Z) + (d lambda(X) g(Y, Z) - d lambda(Y) g(X, Z)) / n = 0
    and B(Y, grad sigma) = (n - 1)/n d lambda(Y) on the coordinate frame."""
    n = g.shape[-1]
    grad = np.einsum("...ij,...j->...i", g_inv, dsigma)
    skew = (
        np.einsum("...x,...yz->...xyz", dsigma, B)
        - np.einsum("...y,...xz->...xyz", dsigma, B)
        + (np.einsum("...x,...yz->...xyz", dlam, g) - np.einsum("...y,...xz->...xyz", dlam, g)) / n
    )
    tgrad = np.einsum("...yk,...k->...y", B, grad) - (n - 1) / n * dlam
    return _maxabs(skew, 3) / scale, _maxabs(tgrad, 1) / scale


def conformal_extract(pmap: PatchMap, grid: Grid, tol=1e-7, derivatives="fit") -> ConformalProfile:
    return conformal_profile(pmap, grid, tol=tol, derivatives=derivatives)


def _exact_derivatives(pmap, data: _MapData, c, eps, sigma, s):
    """d sigma, its chart Hessian and d lambda, differentiated symbolically via f_bar o F."""
    eta = pmap.space.eta_diag
    comp = pmap.composite()
    cj = comp.jet(data.u, 3)
    G = metric_derivatives(cj, eta, 2)  # pulled-back metric and its derivatives
    g, dg, d2g = metric_derivatives(data.src_jet, eta, 2)
    n = pmap.n
    g_inv = np.linalg.inv(g)
    dg_inv = -np.einsum("...kp,...apq,...ql->...akl", g_inv, dg, g_inv)
    d2g_inv = -(
        np.einsum("...bkp,...apq,...ql->...bakl", dg_inv, dg, g_inv)
        + np.einsum("...kp,...bapq,...ql->...bakl", g_inv, d2g, g_inv)
        + np.einsum("...kp,...apq,...bql->...bakl", g_inv, dg, dg_inv)
    )
    dc = (np.einsum("...akl,...lk->...a", dg_inv, G[0]) + np.einsum("...kl,...alk->...a", g_inv, G[1])) / n
    d2c = (
        np.einsum("...bakl,...lk->...ba", d2g_inv, G[0])
        + np.einsum("...akl,...blk->...ba", dg_inv, G[1])
        + np.einsum("...bkl,...alk->...ba", dg_inv, G[1])
        + np.einsum("...kl,...balk->...ba", g_inv, G[2])
    ) / n
    dsigma = dc / (2 * c[..., None])
    hess = d2c / (2 * c[..., None, None]) - np.einsum("...a,...b->...ab", dc, dc) / (2 * c[..., None, None] ** 2)

    h, dh = sff_derivative_from_jet(data.src_jet, pmap.space)
    hc, dhc = sff_derivative_from_jet(cj, pmap.space)
    # composite normal may be oriented opposite to the target's own normal
    same = np.sign(np.einsum("...ij,...ij->...", hc, data.pull_h))
    same = np.where(same == 0, 1.0, same)
    k = s * same * eps
    w = np.exp(-2 * sigma)
    P = (k * w)[..., None, None] * hc - h
    dP = (k * w)[..., None, None, None] * (dhc - 2 * dsigma[..., :, None, None] * hc[..., None, :, :]) - dh
    dlam = (np.einsum("...akl,...lk->...a", dg_inv, P) + np.einsum("...kl,...alk->...a", g_inv, dP)) / n
    return dsigma, hess, dlam


def lambda_extract(pmap: PatchMap, u, tol=1e-7):
    """(lambda, residual_sff, orientation) at one chart point."""
    data = _map_data(pmap, u)
    c, _ = _proportionality(data.pull_g, data.src.g, data.src.g_inv)
    eps, sigma = np.sign(c), 0.5 * np.log(np.abs(c))
    s, lam, res = _choose_orientation(data, eps, sigma, data.src.scale, tol)
    return float(lam[0]), float(res[0]), int(s[0])


# -- bending checks ----------------------------------------------------------


@dataclass(frozen=True)
class BendingReport:
    u: np.ndarray
    samples: int
    max_deviation: float  # max |K_bar(f_* x) - K(x)|
    lam: float
    prediction_gap: float  # max |(K_bar - K) - lambda|; ~0 only when residual_sff is
    tol: float
    residual_sff: float = float("nan")

    @property
    def holds(self):
        return self.max_deviation <= self.tol


def _point_forms(pmap: PatchMap, u, tol=1e-7):
    u = np.asarray(u, dtype=float)
    data = _map_data(pmap, u)
    c, _ = _proportionality(data.pull_g, data.src.g, data.src.g_inv)
    eps, sigma = np.sign(c), 0.5 * np.log(np.abs(c))
    s, lam, res = _choose_orientation(data, eps, sigma, data.src.scale, tol)
    return {
        "g": data.src.g[0], "h": data.src.h[0], "pg": data.pull_g[0], "ph": s[0] * data.pull_h[0],
        "c": float(c[0]), "eps": int(eps[0]), "sigma": float(sigma[0]), "lam": float(lam[0]),
        "res_sff": float(res[0]), "scale": float(data.src.scale[0]),
    }


def check_bending_eq(pmap: PatchMap, u, samples=100, tol=1e-9, seed=0) -> BendingReport:
    """Compare K_bar(f_* x) with K(x) over random nonisotropic x (with nonisotropic image)."""
    f = _point_forms(pmap, u)
    rng = np.random.default_rng(seed)
    n = pmap.n
    devs, gaps = [], []
    while len(devs) < samples:
        x = rng.standard_normal(n)
        gxx, pgxx = x @ f["g"] @ x, x @ f["pg"] @ x
        size = x @ x
        if abs(gxx) <= 1e-6 * size * np.max(np.abs(f["g"])) or abs(pgxx) <= 1e-6 * size * np.max(np.abs(f["pg"])):
            continue
        K = (x @ f["h"] @ x) / gxx
        Kbar = (x @ f["ph"] @ x) / pgxx
        devs.append(abs(Kbar - K))
        gaps.append(abs((Kbar - K) - f["lam"]))
    return BendingReport(np.asarray(u, float), samples, float(max(devs)), f["lam"], float(max(gaps)), tol, f["res_sff"])


def bending_ratio_limit(g, h, pg, ph, xi, v, ks=range(4, 13)):
    """Ratio K_bar(f_* x)/K(x) along x = xi + 2^-k v and its linear extrapolation to t = 0."""
    ts = np.array([2.0 ** -k for k in ks])
    ratios = []
    for t in ts:
        x = xi + t * v
        K = (x @ h @ x) / (x @ g @ x)
        Kbar = (x @ ph @ x) / (x @ pg @ x)
        ratios.append(Kbar / K)
    ratios = np.array(ratios)
    tail_t, tail_r = ts[-4:], ratios[-4:]
    slope, intercept = np.polyfit(tail_t, tail_r, 1)
    return float(intercept), ts, ratios


@dataclass(frozen=True)
class IsotropicLimitReport:
    u: np.ndarray
    xi: np.ndarray
    skipped: bool
    reason: str = ""
    limit: float = float("nan")
    error: float = float("nan")  # |limit - 1|
    pointwise_gap: float = float("nan")  # |f*h_bar(xi,xi) - eps e^{2 sigma} h(xi,xi)| / |c h(xi,xi)|
    bending_deviation: float = float("nan")  # |lambda|: the finite-x failure of the bending identity
    tol: float = 1e-6

    @property
    def holds(self):
        return (not self.skipped) and self.error <= self.tol


def _approach_direction(g, xi):
    w, V = np.linalg.eigh(g)
    best, score = None, -1.0
    for k in np.argsort(-np.abs(w)):
        v = V[:, k]
        sc = abs(v @ g @ xi)
        if sc > score:
            best, score = v, sc
    return best


def check_isotropic_limit(pmap: PatchMap, u, xi, tol=1e-6, h_tol=1e-8) -> IsotropicLimitReport:
    """Evaluate the isotropic-limit condition at u along the null vector xi.

    When h(xi, xi) vanishes the ratio limit carries no information; the
    point is reported as skipped with the reason.
    """
    f = _point_forms(pmap, u)
    xi = np.asarray(xi, dtype=float)
    u = np.asarray(u, dtype=float)
    g, h, pg, ph = f["g"], f["h"], f["pg"], f["ph"]
    size = xi @ xi
    if abs(xi @ g @ xi) > 1e-8 * size * np.max(np.abs(g)):
        return IsotropicLimitReport(u, xi, True, "xi is not isotropic for g", tol=tol)
    hxx = xi @ h @ xi
    if abs(hxx) <= h_tol * f["scale"] * size:
        return IsotropicLimitReport(u, xi, True, "h(xi, xi) = 0: ratio limit uninformative", tol=tol)
    v = _approach_direction(g, xi)
    limit, _, _ = bending_ratio_limit(g, h, pg, ph, xi, v)
    gap = abs(xi @ ph @ xi - f["c"] * hxx) / abs(f["c"] * hxx)
    return IsotropicLimitReport(u, xi, False, "", limit, abs(limit - 1.0), float(gap), abs(f["lam"]), tol)


def admissible_null_vector(g, h, count=64, seed=0):
    """The cone sample maximizing |h(xi, xi)| (None for a definite metric)."""
    try:
        sample = sample_isotropic(g, count, seed)
    except ValueError:
        return None
    vals = np.abs(np.einsum("ki,ij,kj->k", sample.vectors, h, sample.vectors))
    return sample.vectors[int(np.argmax(vals))]


# -- null gradient diagnostic --------------------------------------------------


@dataclass(frozen=True)
class NullGradientReport:
    U_indices: tuple
    violations: tuple  # (index, message)

    @property
    def consistent(self):
        return not self.violations

    @property
    def vacuous(self):
        return not self.U_indices


def null_gradient_diagnostic(profile: ConformalProfile, patch: ImmersionPatch, tol=1e-7) -> NullGradientReport:
    """On U = {grad sigma null and nonzero}, points must be (quasi-)umbilic with R = 0."""
    gnorm = np.linalg.norm(profile.dsigma, axis=-1)
    U = np.flatnonzero((np.abs(profile.grad_sigma_norm2) <= tol) & (gnorm > tol))
    bad = []
    if len(U):
        scan = density_scan(patch, profile.grid.points[U], tol)
        for i, kind in zip(U, scan.kinds):
            if kind not in ("umbilic", "quasi_umbilic"):
                bad.append((int(i), f"point is {kind}, expected (quasi-)umbilic"))
            if profile.R_norm[i] > tol * profile.scale[i] ** 2:
                bad.append((int(i), f"||R|| = {profile.R_norm[i]:.3e} does not vanish"))
    return NullGradientReport(tuple(int(i) for i in U), tuple(bad))


# -- motion fitting -----------------------------------------------------------


@dataclass(frozen=True)
class MotionFit:
    motion: Motion
    point_mismatch: float  # max Euclidean distance |A p + b - p_bar|
    defect: float  # max |A^T eta A - eta|
    diameter: float

    def passes(self, tol):
        return self.point_mismatch <= tol * max(self.diameter, 1.0) and self.defect <= tol

    @property
    def fit_residual(self):
        return max(self.point_mismatch, self.defect)


def fit_motion(pmap: PatchMap, points) -> MotionFit:
    """Least-squares affine map carrying f(u_i) to f_bar(F(u_i))."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    D = pmap.space.dim_total
    if len(points) < D + 1:
        raise RankDeficientError(f"{len(points)} points cannot determine an affine map of R^{D}")
    X = pmap.source.jet(points, 0).d[0]
    Y = pmap.target.jet(pmap(points), 0).d[0]
    centred = X - X.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[-1] <= 1e-9 * sv[0]:
        raise RankDeficientError("sample points lie in a proper affine subspace of the ambient space")
    Xa = np.hstack([X, np.ones((len(X), 1))])
    coef, *_ = np.linalg.lstsq(Xa, Y, rcond=None)
    A, b = coef[:D].T, coef[D]
    motion = Motion(A, b)
    mismatch = float(np.max(np.linalg.norm(Xa @ coef - Y, axis=1)))
    diameter = float(np.max(np.linalg.norm(X - X.mean(axis=0), axis=1)) * 2)
    return MotionFit(motion, mismatch, pseudo_orthogonality_defect(pmap.space, A), diameter)


# -- verdict -----------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisConfig:
    geometry_grid: int = 5
    profile_grid: int = 9
    classify_tol: float = 1e-6
    flatness_tol: float = 1e-6
    profile_tol: float = 1e-7
    verdict_tol: float = 1e-6
    motion_tol: float = 1e-6
    curvature_tol: float = 1e-8
    point_p: Optional[tuple] = None
    derivatives: str = "fit"
    seed: int = 0


@dataclass
class CongruenceVerdict:
    kind: str  # congruence | isometry_not_extended | conformal_only | not_conformal | hypotheses_unmet
    reason: str = ""
    branch: Optional[str] = None  # "global" (generic, not conformally flat) or "local" (R != 0 near p)
    fit: Optional[MotionFit] = None
    witness: Optional[np.ndarray] = None
    profile: Optional[ConformalProfile] = None
    density: Optional[DensityScan] = None
    flatness: Optional[FlatnessVerdict] = None
    scope: Optional[np.ndarray] = None  # grid indices the verdict covers
    subtest: dict = field(default_factory=dict)
    null_gradient: Optional[NullGradientReport] = None
    notes: list = field(default_factory=list)

    @property
    def motion(self):
        return None if self.fit is None else self.fit.motion

    def __str__(self):
        return self.kind if not self.reason else f"{self.kind} ({self.reason})"


def _component(mask, shape, start):
    labels, _ = ndimage.label(mask.reshape(shape))
    lab = labels.ravel()[start]
    return np.flatnonzero(labels.ravel() == lab)


def _isometry_subtest(profile, idx, tol):
    sig = profile.sigma[idx]
    out = {
        "sigma_spread": float(np.max(sig) - np.min(sig)),
        "sigma_mean": float(np.mean(sig)),
        "eps": int(profile.eps[idx][0]),
        "lambda_max": float(np.max(np.abs(profile.lam[idx]))),
        "sff_max": float(np.max(profile.residual_sff[idx])),
        "tol": tol,
    }
    out["sigma_constant"] = out["sigma_spread"] <= tol
    out["sigma_zero"] = out["sigma_constant"] and abs(out["sigma_mean"]) <= tol
    out["isometric"] = out["sigma_zero"] and out["eps"] == 1
    out["h_preserved"] = out["lambda_max"] <= tol and out["sff_max"] <= tol
    return out


def decide_congruence(scene: SceneModel, map_name: str, config: AnalysisConfig = AnalysisConfig()) -> CongruenceVerdict:
    """Run the full pipeline for one map of a scene."""
    if map_name not in scene.maps:
        raise KeyError(map_name)
    pmap = PatchMap.from_scene(scene, map_name)
    return decide_map(pmap, config)


def decide_map(pmap: PatchMap, config: AnalysisConfig = AnalysisConfig()) -> CongruenceVerdict:
    src = pmap.source
    grid = chart_grid(src.domain, config.profile_grid)
    try:
        profile = conformal_profile(pmap, grid, tol=config.profile_tol, derivatives=config.derivatives)
    except ConformalityError as err:
        return CongruenceVerdict("not_conformal", reason=str(err), witness=err.u)

    ggrid = chart_grid(src.domain, config.geometry_grid)
    gjet = src.jet(ggrid.points, 4 if src.n == 3 else 3)
    density = density_scan(src, geometry=geometry_from_jet(gjet, src.space), tol=config.classify_tol)
    pack = curvature_from_jet(gjet, src.space, cotton=(src.n == 3))
    flat = flatness_from_pack(pack, config.flatness_tol)

    R_thr = config.curvature_tol * profile.scale**2
    R_nonzero = profile.R_norm > R_thr
    th1 = density.nonquasi_umbilic_dense and flat.verdict == "not"
    th2 = density.nonumbilic_dense and bool(np.any(R_nonzero))

    reasons = []
    if density.umbilic_fraction == 1.0:
        reasons.append("umbilic everywhere")
    elif not density.nonumbilic_dense:
        reasons.append("umbilic points on the grid")
    elif not density.nonquasi_umbilic_dense:
        reasons.append("quasi-umbilic points on the grid")
    if flat.verdict == "flat_conformally":
        reasons.append("conformally flat")
    elif flat.verdict == "indeterminate":
        reasons.append("conformal flatness indeterminate")
    if not np.any(R_nonzero):
        reasons.append("R = 0 at every grid point")

    all_idx = np.arange(len(grid))
    if th1:
        branch, scope = "global", all_idx
    elif th2:
        if config.point_p is not None:
            p = int(np.argmin(np.linalg.norm(grid.points - np.asarray(config.point_p, float), axis=1)))
        else:
            p = int(np.argmax(profile.R_norm))
        if R_nonzero[p]:
            branch, scope = "local", _component(R_nonzero, grid.shape, p)
        else:
            branch, scope = None, all_idx
            reasons.append("R = 0 at the designated point")
    else:
        branch, scope = None, all_idx

    sub = _isometry_subtest(profile, scope, config.verdict_tol)
    fit = None
    if sub["isometric"] and sub["h_preserved"]:
        try:
            fit = fit_motion(pmap, grid.points[scope])
            sub["motion_fit"] = fit.passes(config.motion_tol)
        except RankDeficientError as err:
            sub["motion_fit"] = False
            sub["motion_fit_error"] = str(err)
    else:
        sub["motion_fit"] = False
    sub["passed"] = bool(sub["isometric"] and sub["h_preserved"] and sub["motion_fit"])

    null_gradient = null_gradient_diagnostic(profile, src, config.profile_tol)
    common = dict(profile=profile, density=density, flatness=flat, scope=scope, subtest=sub, null_gradient=null_gradient, fit=fit)
    notes = []
    if profile.eps[0] == -1:
        notes.append("anti-isometric sign (eps = -1): no bundled scene exercises this branch")
    if not null_gradient.consistent:
        notes.append("null-gradient consistency violated: a point of U is generic or has R != 0")

    if branch is None:
        text = "; ".join(reasons) or "hypotheses not met"
        if sub["passed"]:
            notes.append("the congruence subtest itself passed (isometric, h preserved, motion fitted)")
        return CongruenceVerdict("hypotheses_unmet", reason=text, notes=notes, **common)
    if sub["isometric"] and sub["h_preserved"]:
        if sub["motion_fit"]:
            return CongruenceVerdict("congruence", branch=branch, notes=notes, **common)
        notes.append(
            "sigma = 0, eps = 1, lambda = 0 hold but no ambient motion fits: "
            "g and h should determine the patch up to a motion, so suspect tolerance miscalibration"
        )
        return CongruenceVerdict("isometry_not_extended", branch=branch, notes=notes, **common)
    why = []
    if not sub["sigma_constant"]:
        why.append("sigma not constant")
    elif not sub["sigma_zero"]:
        why.append(f"sigma = {sub['sigma_mean']:.6g}")
    if sub["eps"] != 1:
        why.append("eps = -1")
    if not sub["h_preserved"]:
        why.append("second fundamental form not preserved")
    return CongruenceVerdict("conformal_only", reason="; ".join(why), branch=branch, notes=notes, **common)


__all__ = [
    "AnalysisConfig",
    "BendingReport",
    "CongruenceVerdict",
    "ConformalProfile",
    "ConformalityError",
    "IsotropicLimitReport",
    "NullGradientReport",
    "MotionFit",
    "PatchMap",
    "RankDeficientError",
    "SignFlipError",
    "admissible_null_vector",
    "bending_ratio_limit",
    "check_bending_eq",
    "check_isotropic_limit",
    "conformal_extract",
    "conformal_profile",
    "decide_congruence",
    "decide_map",
    "fit_motion",
    "fitted_derivatives",
    "inner",
    "lambda_extract",
    "gradient_constraint_residuals",
    "null_gradient_diagnostic",
    "pullback2",
    "pullback4",
    "pullback_metric",
]


def gradient_constraint_residuals(profile: ConformalProfile, sigma=None, lam=None):
    """(residual_skew, residual_gradient) per grid point.

    With ``sigma`` or ``lam`` given, the residuals are re-evaluated for those
    grid fields (differentiated by the cubic-fit route) in place of the
    profile's own.
    """
    if sigma is None and lam is None:
        return profile.residual_skew, profile.residual_gradient
    ex = profile.extras
    ds = profile.dsigma if sigma is None else fitted_derivatives(sigma, profile.grid)
    dl = profile.dlam if lam is None else fitted_derivatives(lam, profile.grid)
    return _gradient_constraints(ds, dl, ex["g"], ex["g_inv"], ex["B"], profile.scale)
