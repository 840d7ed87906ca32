"""Bundled invariant suites: Gauss, Codazzi, cone proportionality, conformal
curvature identities and constant-curvature values."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classify import cone_proportionality_fit, sample_isotropic
from .curvature import codazzi_from_jet, curvature_from_jet, tensor_norm
from .mapanalysis import PatchMap, conformal_profile
from .scenes import bundled_names, load_bundled
from .surface import ImmersionPatch, chart_grid

DEFAULT_TOLS = {
    "gauss": 1e-7,
    "codazzi": 1e-7,
    "cone_c": 1e-10,
    "cone_violation": 1e-3,
    "identities": 1e-6,
    "constant_curvature": 1e-8,
}


@dataclass
class Check:
    label: str
    value: float
    tol: float
    passed: bool


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)

    def add(self, label, value, tol, passed=None):
        value = float(value)
        if passed is None:
            passed = bool(value <= tol)
        self.checks.append(Check(label, value, float(tol), bool(passed)))

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]


def _base(name):
    sc = load_bundled(name)
    return sc, ImmersionPatch.from_spec(sc.space, sc.surfaces["base"])


def suite_gauss(tol, grid=5):
    res = SuiteResult("gauss")
    for name in bundled_names():
        _, p = _base(name)
        pack = curvature_from_jet(p.jet(chart_grid(p.domain, grid).points, 3), p.space, cotton=False)
        res.add(name, np.max(pack.gauss_residual), tol)
    return res


def suite_codazzi(tol, grid=5):
    res = SuiteResult("codazzi")
    for name in bundled_names():
        _, p = _base(name)
        r, scale = codazzi_from_jet(p.jet(chart_grid(p.domain, grid).points, 3), p.space)
        res.add(name, np.max(np.max(np.abs(r), axis=(-3, -2, -1)) / scale), tol)
    return res


def random_indefinite_metric(rng, n=3):
    """A random symmetric form with both signs among its eigenvalues."""
    k = int(rng.integers(1, n))
    w = np.concatenate([-rng.uniform(0.5, 2.0, k), rng.uniform(0.5, 2.0, n - k)])
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(w) @ Q.T


def random_nonproportional(rng, g, min_defect=0.1):
    """Symmetric L whose g-traceless part has relative size at least ``min_defect``."""
    n = len(g)
    while True:
        M = rng.standard_normal((n, n))
        L = 0.5 * (M + M.T)
        c = np.trace(np.linalg.solve(g, L)) / n
        if np.linalg.norm(L - c * g) >= min_defect * np.linalg.norm(L):
            return L


def suite_cone(tol_c, tol_violation, seed=0, cases=100):
    res = SuiteResult("cone_proportionality")
    worst_c, worst_v, misses = 0.0, np.inf, 0
    for k in range(cases):
        rng = np.random.default_rng(seed + k)
        g = random_indefinite_metric(rng)
        sample = sample_isotropic(g, 64, seed + k)
        c = rng.uniform(-3, 3)
        out = cone_proportionality_fit(c * g, g, sample)
        if not out.proportional:
            misses += 1
        else:
            worst_c = max(worst_c, abs(out.c - c))
        out = cone_proportionality_fit(random_nonproportional(rng, g), g, sample)
        if out.proportional or out.witness is None:
            misses += 1
        else:
            worst_v = min(worst_v, out.violation)
    res.add("proportional c error", worst_c, tol_c)
    res.add("non-proportional min violation", worst_v, tol_violation, worst_v >= tol_violation)
    res.add("misclassified cases", misses, 0)
    return res


IDENTITY_CASES = (
    ("ellipsoid", "motion"),
    ("ellipsoid", "dilation"),
    ("desitter", "motion"),
    ("desitter", "dilation"),
    ("desitter_deformed", "motion"),
    ("desitter_deformed", "dilation"),
)


def suite_identities(tol, grid=9):
    res = SuiteResult("conformal_identities")
    for scene, m in IDENTITY_CASES:
        pm = PatchMap.from_scene(load_bundled(scene), m)
        prof = conformal_profile(pm, chart_grid(pm.source.domain, grid))
        res.add(f"{scene}/{m} conformal curvature", np.max(prof.residual_conformal_curvature), tol)
        ok = prof.curvature_shift_applicable
        if ok.any():
            res.add(f"{scene}/{m} curvature shift", np.max(prof.residual_curvature_shift[ok]), tol)
    return res


def suite_constant_curvature(tol, grid=5):
    res = SuiteResult("constant_curvature")
    for name, r in (("sphere1", 1.0), ("sphere2", 2.0)):
        _, p = _base(name)
        pack = curvature_from_jet(p.jet(chart_grid(p.domain, grid).points, 4), p.space, cotton=True)
        res.add(f"{name} scalar curvature", np.max(np.abs(pack.tau - 6.0 / r**2)), tol)
        res.add(f"{name} weyl", np.max(tensor_norm(pack.C)), tol)
        res.add(f"{name} cotton", np.max(tensor_norm(pack.cotton3, 3)), tol)
    return res


def run_selftest(tol=None, seed=0):
    """All suites; ``tol`` replaces every suite tolerance when given."""
    t = dict(DEFAULT_TOLS)
    if tol is not None:
        t = {k: tol for k in t}
        # the witness-violation bound is a floor, so it tightens upward
        t["cone_violation"] = DEFAULT_TOLS["cone_violation"] * DEFAULT_TOLS["cone_c"] / tol if tol > 0 else np.inf
    return [
        suite_gauss(t["gauss"]),
        suite_codazzi(t["codazzi"]),
        suite_cone(t["cone_c"], t["cone_violation"], seed),
        suite_identities(t["identities"]),
        suite_constant_curvature(t["constant_curvature"]),
    ]
