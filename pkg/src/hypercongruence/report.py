"""Deterministic JSON reports: stable key order, floats at 17 significant digits."""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from . import __version__
from .classify import DensityScan
from .curvature import CurvaturePack, FlatnessVerdict, codazzi_from_jet, curvature_from_jet, tensor_norm
from .mapanalysis import CongruenceVerdict, ConformalProfile


def _float(x):
    x = float(x)
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return json.dumps("inf" if x > 0 else "-inf")
    return format(x, ".17g")


def dumps(obj, indent=2):
    """Serialize with insertion-ordered keys and '.17g' floats."""
    out = []

    def emit(o, level):
        pad = " " * (indent * level)
        inner = " " * (indent * (level + 1))
        if isinstance(o, dict):
            if not o:
                out.append("{}")
                return
            out.append("{\n")
            for i, (k, v) in enumerate(o.items()):
                out.append(f"{inner}{json.dumps(str(k))}: ")
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(pad + "}")
        elif isinstance(o, (list, tuple)):
            if not o:
                out.append("[]")
                return
            if all(not isinstance(v, (dict, list, tuple)) for v in o):
                out.append("[")
                for i, v in enumerate(o):
                    emit(v, level + 1)
                    if i < len(o) - 1:
                        out.append(", ")
                out.append("]")
                return
            out.append("[\n")
            for i, v in enumerate(o):
                out.append(inner)
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(pad + "]")
        elif isinstance(o, np.ndarray):
            emit(o.tolist(), level)
        elif o is None or isinstance(o, (bool, np.bool_)):
            out.append("null" if o is None else ("true" if o else "false"))
        elif isinstance(o, (int, np.integer)):
            out.append(str(int(o)))
        elif isinstance(o, (float, np.floating)):
            out.append(_float(o))
        else:
            out.append(json.dumps(str(o)))

    emit(obj, 0)
    return "".join(out) + "\n"


def checked(value, tol, passed=None):
    """A numeric field together with the tolerance it was tested against."""
    value = float(value)
    if passed is None and tol is not None:
        passed = bool(value <= tol)
    return {"value": value, "tol": None if tol is None else float(tol), "pass": passed}


def info(value):
    """A reported, untested number."""
    return {"value": float(value), "tol": None, "pass": None}


def _nanmax(a):
    a = np.asarray(a, dtype=float)
    a = a[~np.isnan(a)]
    return float(np.max(a)) if a.size else float("nan")


def scene_header(text, label, scene):
    return {
        "tool": {"name": "hypercongruence", "version": __version__},
        "scene": {
            "source": label,
            "digest": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            "space": {"dim": scene.space.dim_total, "signature": scene.space.neg_count},
            "surfaces": sorted(scene.surfaces),
            "maps": sorted(scene.maps),
        },
    }


def surface_summary(patch, grid, tols, jet=None):
    """Curvature norms, Gauss/Codazzi residuals, classification and conformal flatness on ``grid``."""
    from .classify import density_scan
    from .curvature import flatness_from_pack
    from .surface import geometry_from_jet

    order = 4 if patch.n == 3 else 3
    jet = jet or patch.jet(grid.points, order)
    pack: CurvaturePack = curvature_from_jet(jet, patch.space, cotton=(patch.n == 3))
    cres, cscale = codazzi_from_jet(jet, patch.space)
    cod = np.max(np.abs(cres), axis=(-3, -2, -1)) / cscale
    scan: DensityScan = density_scan(patch, geometry=geometry_from_jet(jet, patch.space), tol=tols["classify"])
    flat: FlatnessVerdict = flatness_from_pack(pack, tols["flatness"])
    R_norm = pack.R_norm
    out = {
        "grid_per_axis": len(grid.axes[0]),
        "points": len(grid),
        "normal_sign": sorted({int(e) for e in pack.eps_N}),
        "metric_index": sorted({int(np.sum(np.linalg.eigvalsh(g) < 0)) for g in pack.g}),
        "curvature": {
            "R_norm_min": info(np.min(R_norm)),
            "R_norm_max": info(np.max(R_norm)),
            "scalar_min": info(np.min(pack.tau)),
            "scalar_max": info(np.max(pack.tau)),
            "weyl_norm_max": info(np.max(tensor_norm(pack.C))),
        },
        "gauss_residual": checked(np.max(pack.gauss_residual), tols["gauss"]),
        "gauss_sign": sorted({int(e) for e in np.atleast_1d(pack.eps_gauss)}),
        "codazzi_residual": checked(np.max(cod), tols["codazzi"]),
        "classification": {
            "umbilic_fraction": info(scan.umbilic_fraction),
            "quasi_umbilic_fraction": info(scan.quasi_umbilic_fraction),
            "generic_fraction": info(scan.generic_fraction),
        },
        "conformal_flatness": {
            "verdict": flat.verdict,
            "test": flat.test,
            "max_ratio": checked(flat.max_ratio, flat.tol, flat.verdict == "flat_conformally"),
        },
    }
    if pack.cotton3 is not None:
        out["curvature"]["cotton_norm_max"] = info(np.max(tensor_norm(pack.cotton3, 3)))
    return out


def profile_summary(profile: ConformalProfile, tol, shift_tol):
    mx = profile.maxima()
    return {
        "grid_per_axis": len(profile.grid.axes[0]),
        "points": len(profile.grid),
        "derivatives": profile.derivatives,
        "eps": int(profile.eps[0]),
        "sigma_min": info(np.min(profile.sigma)),
        "sigma_max": info(np.max(profile.sigma)),
        "grad_sigma_max": info(np.max(np.abs(profile.dsigma))),
        "lambda_min": info(np.min(profile.lam)),
        "lambda_max": info(np.max(profile.lam)),
        "Q_max": info(np.max(np.abs(profile.Q))),
        "target_orientation": sorted({int(s) for s in profile.h_sign}),
        "residual_conformal": checked(mx["residual_conformal"], tol),
        "residual_sff": checked(mx["residual_sff"], profile.sff_tol),
        "residual_skew": checked(mx["residual_skew"], tol),
        "residual_gradient": checked(mx["residual_gradient"], tol),
        "residual_conformal_curvature": checked(mx["residual_conformal_curvature"], shift_tol),
        "residual_curvature_shift": checked(mx["residual_curvature_shift"], shift_tol)
        if profile.curvature_shift_applicable.any()
        else {"value": None, "tol": shift_tol, "pass": None, "applicable_points": 0},
        "curvature_shift_applicable_points": int(np.sum(profile.curvature_shift_applicable)),
    }


def verdict_summary(v: CongruenceVerdict, config):
    out = {"kind": v.kind, "reason": v.reason, "branch": v.branch, "notes": list(v.notes)}
    if v.witness is not None:
        out["witness"] = [float(x) for x in v.witness]
    if v.fit is not None:
        out["motion"] = {"linear": v.fit.motion.linear, "translation": v.fit.motion.translation}
        out["fit"] = {
            "point_mismatch": checked(v.fit.point_mismatch, config.motion_tol * max(v.fit.diameter, 1.0)),
            "pseudo_orthogonality_defect": checked(v.fit.defect, config.motion_tol),
            "fit_residual": info(v.fit.fit_residual),
            "diameter": info(v.fit.diameter),
        }
    if v.density is not None:
        out["hypotheses"] = {
            "umbilic_fraction": info(v.density.umbilic_fraction),
            "quasi_umbilic_fraction": info(v.density.quasi_umbilic_fraction),
            "generic_fraction": info(v.density.generic_fraction),
            "conformal_flatness": v.flatness.verdict,
        }
    if v.scope is not None:
        out["scope_points"] = int(len(v.scope))
    if v.subtest:
        sub = v.subtest
        out["subtest"] = {
            "sigma_spread": checked(sub["sigma_spread"], sub["tol"]),
            "sigma_mean": checked(abs(sub["sigma_mean"]), sub["tol"]),
            "eps": sub["eps"],
            "lambda_max": checked(sub["lambda_max"], sub["tol"]),
            "sff_max": checked(sub["sff_max"], sub["tol"]),
            "motion_fit": bool(sub["motion_fit"]),
            "passed": bool(sub["passed"]),
        }
    if v.null_gradient is not None:
        out["null_gradient"] = {
            "points": len(v.null_gradient.U_indices),
            "consistent": v.null_gradient.consistent,
            "violations": [f"{i}: {msg}" for i, msg in v.null_gradient.violations],
        }
    return out
