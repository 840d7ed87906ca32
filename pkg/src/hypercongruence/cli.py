"""Command line: analyze a scene, check a map, or run the self-test suites.

Exit codes: 0 success, 1 self-test failure, 2 parse error or unknown map,
3 geometry error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .exprlang import LanguageError, parse_scene
from .mapanalysis import (
    AnalysisConfig,
    PatchMap,
    admissible_null_vector,
    check_bending_eq,
    check_isotropic_limit,
    decide_map,
)
from .report import checked, dumps, info, profile_summary, scene_header, surface_summary, verdict_summary
from .scenes import bundled_names, bundled_text
from .surface import GeometryError, ImmersionPatch, chart_grid, point_geometry

EXIT_SELFTEST, EXIT_PARSE, EXIT_GEOMETRY, EXIT_IO = 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def load_scene_text(arg):
    """Read a scene file, falling back to a bundled scene of that name."""
    path = Path(arg)
    if path.is_file():
        try:
            return path.read_text(encoding="utf-8"), str(path)
        except OSError as err:
            raise CliError(EXIT_IO, f"cannot read {arg}: {err}") from err
    if not path.suffix and arg in bundled_names():
        return bundled_text(arg), f"bundled:{arg}"
    raise CliError(EXIT_IO, f"scene file not found: {arg} (bundled scenes: {', '.join(bundled_names())})")


def _parse(text, label):
    try:
        return parse_scene(text)
    except LanguageError as err:
        raise CliError(EXIT_PARSE, f"{label}: {err}") from err


def _grid_arg(text):
    k = int(text)
    if k < 3:
        raise argparse.ArgumentTypeError("grid must be at least 3 points per axis")
    return k


def _point_arg(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _tols(tol):
    base = {"classify": 1e-6, "flatness": 1e-6, "gauss": 1e-7, "codazzi": 1e-7}
    return base if tol is None else {k: tol for k in base}


def cmd_analyze(args):
    text, label = load_scene_text(args.scene)
    scene = _parse(text, label)
    grid_k = args.grid or 5
    tols = _tols(args.tol)
    report = scene_header(text, label, scene)
    report["config"] = {"grid_per_axis": grid_k, "tolerances": tols, "seed": args.seed}
    surfaces = {}
    for name in sorted(scene.surfaces):
        patch = ImmersionPatch.from_spec(scene.space, scene.surfaces[name])
        surfaces[name] = surface_summary(patch, chart_grid(patch.domain, grid_k), tols)
    report["surfaces"] = surfaces
    lines = [f"scene {label}: R^{scene.space.dim_total}_{scene.space.neg_count}"]
    for name, s in surfaces.items():
        cls = s["classification"]
        lines.append(
            f"  {name}: umbilic {cls['umbilic_fraction']['value']:.3g}, quasi-umbilic "
            f"{cls['quasi_umbilic_fraction']['value']:.3g}, generic {cls['generic_fraction']['value']:.3g}; "
            f"conformal flatness {s['conformal_flatness']['verdict']}; scalar curvature "
            f"[{s['curvature']['scalar_min']['value']:.10g}, {s['curvature']['scalar_max']['value']:.10g}]; "
            f"gauss {'ok' if s['gauss_residual']['pass'] else 'FAIL'}, codazzi {'ok' if s['codazzi_residual']['pass'] else 'FAIL'}"
        )
    return report, lines, 0


def _point_checks(pmap, u, seed, tol):
    out = {"u": list(u)}
    bend = check_bending_eq(pmap, u, samples=100, tol=tol, seed=seed)
    out["bending"] = {
        "max_deviation": checked(bend.max_deviation, tol),
        "lambda": info(bend.lam),
        "prediction_gap": info(bend.prediction_gap),
        "residual_sff": info(bend.residual_sff),
    }
    pg = point_geometry(pmap.source, np.asarray(u, float))
    xi = admissible_null_vector(pg.g, pg.h, 64, seed)
    if xi is None:
        out["isotropic_limit"] = {"skipped": True, "reason": "metric is definite: no isotropic vectors"}
    else:
        lim = check_isotropic_limit(pmap, u, xi, tol=tol)
        out["isotropic_limit"] = {"skipped": lim.skipped, "reason": lim.reason, "xi": lim.xi}
        if not lim.skipped:
            out["isotropic_limit"].update(
                limit=info(lim.limit),
                error=checked(lim.error, tol),
                pointwise_gap=checked(lim.pointwise_gap, tol),
            )
    return out


def cmd_check_map(args):
    text, label = load_scene_text(args.scene)
    scene = _parse(text, label)
    if args.map not in scene.maps:
        raise CliError(EXIT_PARSE, f"unknown map {args.map!r}; scene has: {', '.join(sorted(scene.maps)) or 'none'}")
    config = AnalysisConfig(seed=args.seed, derivatives=args.derivatives)
    if args.grid:
        config = replace(config, profile_grid=args.grid)
    if args.tol is not None:
        config = replace(config, verdict_tol=args.tol, motion_tol=args.tol)
    pmap = PatchMap.from_scene(scene, args.map)
    if args.point is not None:
        if len(args.point) != pmap.n:
            raise CliError(EXIT_PARSE, f"--point needs {pmap.n} coordinates, got {len(args.point)}")
        config = replace(config, point_p=args.point)
    verdict = decide_map(pmap, config)
    spec = scene.maps[args.map]
    report = scene_header(text, label, scene)
    report["config"] = {
        "profile_grid": config.profile_grid,
        "geometry_grid": config.geometry_grid,
        "derivatives": config.derivatives,
        "tolerances": {
            "classify": config.classify_tol,
            "flatness": config.flatness_tol,
            "profile": config.profile_tol,
            "verdict": config.verdict_tol,
            "motion": config.motion_tol,
            "curvature": config.curvature_tol,
        },
        "point": None if config.point_p is None else list(config.point_p),
        "seed": config.seed,
    }
    report["map"] = {"name": args.map, "source": spec.source, "target": spec.target}
    src = pmap.source
    report["source_geometry"] = surface_summary(
        src, chart_grid(src.domain, config.geometry_grid),
        {"classify": config.classify_tol, "flatness": config.flatness_tol, "gauss": 1e-7, "codazzi": 1e-7},
    )
    report["verdict"] = verdict_summary(verdict, config)
    if verdict.profile is not None:
        report["profile"] = profile_summary(verdict.profile, config.profile_tol, config.verdict_tol)
        if args.point is not None:
            report["point_checks"] = _point_checks(pmap, np.asarray(args.point, float), config.seed, config.verdict_tol)
    lines = [f"map {args.map}: {spec.source} -> {spec.target} in {label}", f"  verdict: {verdict}"]
    if verdict.fit is not None:
        lines.append(f"  motion fit residual {verdict.fit.fit_residual:.3e}")
    lines += [f"  note: {n}" for n in verdict.notes]
    return report, lines, 0


def cmd_selftest(args):
    from .selftest import run_selftest

    t0 = time.perf_counter()
    suites = run_selftest(tol=args.tol, seed=args.seed)
    elapsed = time.perf_counter() - t0
    report = {
        "tool": {"name": "hypercongruence", "version": __version__},
        "config": {"tol": args.tol, "seed": args.seed},
        "suites": {
            s.name: {
                "passed": s.passed,
                "checks": {c.label: {"value": c.value, "tol": c.tol, "pass": c.passed} for c in s.checks},
            }
            for s in suites
        },
        "passed": all(s.passed for s in suites),
    }
    lines = []
    for s in suites:
        lines.append(f"{'PASS' if s.passed else 'FAIL'} {s.name} ({len(s.checks)} checks)")
        for c in s.failures:
            lines.append(f"    {c.label}: {c.value:.3e} vs tol {c.tol:.3e}")
    lines.append(f"selftest {'passed' if report['passed'] else 'FAILED'} in {elapsed:.1f} s")
    return report, lines, 0 if report["passed"] else EXIT_SELFTEST


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=_grid_arg, help="points per chart axis (>= 3)")
    common.add_argument("--tol", type=float, help="override the tolerance gates")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the JSON report here (default: standard output)")
    common.add_argument("--quiet", action="store_true", help="suppress the human summary")

    parser = argparse.ArgumentParser(prog="hypercongruence", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("analyze", parents=[common], help="geometry summary of every surface in a scene")
    p.add_argument("scene", help="scene file or bundled scene name")
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("check-map", parents=[common], help="conformal profile and congruence verdict of a map")
    p.add_argument("scene")
    p.add_argument("--map", required=True)
    p.add_argument("--point", type=_point_arg, help="chart point u1,...,un for the local branch and point checks")
    p.add_argument("--derivatives", choices=("fit", "exact"), default="fit")
    p.set_defaults(func=cmd_check_map)
    p = sub.add_parser("selftest", parents=[common], help="run the bundled invariant suites")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        report, lines, code = args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except GeometryError as err:
        print(f"geometry error: {err}", file=sys.stderr)
        return EXIT_GEOMETRY
    text = dumps(report)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as err:
            print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
            return EXIT_IO
        if not args.quiet:
            print("\n".join(lines))
    else:
        if not args.quiet:
            print("\n".join(lines), file=sys.stderr)
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
