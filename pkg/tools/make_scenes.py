"""Regenerate the bundled scene files (motions drawn from fixed seeds)."""

from pathlib import Path

import numpy as np

from hypercongruence.ambient import AmbientSpace, random_motion, verify_motion
from hypercongruence.scenes import (
    map_section,
    motion_matrix_text,
    moved_components,
    scaled_components,
    surface_section,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "hypercongruence" / "scenes"

S3 = ["r*cos(u1)", "r*sin(u1)*cos(u2)", "r*sin(u1)*sin(u2)*cos(u3)", "r*sin(u1)*sin(u2)*sin(u3)"]


def sphere3(r):
    return [c.replace("r*", f"{r}*") if r != 1 else c.replace("r*", "") for c in S3]


def ident(n):
    return [f"u{i + 1}" for i in range(n)]


def build(name, header, dim, sig, base, domain, extras, seed, dilation=None, rapidity=0.5):
    space = AmbientSpace(dim, sig)
    n = dim - 1
    cv = ident(n)
    motion = random_motion(space, np.random.default_rng(seed), rapidity=rapidity)
    assert verify_motion(space, motion, 1e-12)
    parts = [f"# {header}\n", motion_matrix_text(motion), f"[space] dim={dim} signature={sig}\n"]
    parts.append(surface_section("base", cv, base, domain))
    parts.append(surface_section("moved", cv, moved_components(base, motion), domain))
    if dilation is not None:
        parts.append(surface_section("scaled", cv, scaled_components(base, dilation), domain))
    parts.append(map_section("motion", "base", "moved", cv))
    parts.append(map_section("back", "moved", "base", cv))
    if dilation is not None:
        parts.append(map_section("dilation", "base", "scaled", cv))
    for line in extras:
        parts.append(line)
    (OUT / f"{name}.scene").write_text("".join(parts))


def main():
    build("sphere1", "unit 3-sphere in R^4", 4, 0, sphere3(1),
          [(0.3, 2.8), (0.3, 2.8), (-2.5, 2.5)], [], seed=1, dilation=2.0)
    build("sphere2", "3-sphere of radius 2 in R^4", 4, 0, sphere3(2),
          [(0.3, 2.8), (0.3, 2.8), (-2.5, 2.5)], [], seed=2, dilation=0.5)
    s4 = ["cos(u1)", "sin(u1)*cos(u2)", "sin(u1)*sin(u2)*cos(u3)",
          "sin(u1)*sin(u2)*sin(u3)*cos(u4)", "sin(u1)*sin(u2)*sin(u3)*sin(u4)"]
    build("sphere4", "unit 4-sphere in R^5", 5, 0, s4,
          [(0.4, 2.7), (0.4, 2.7), (0.4, 2.7), (-2.5, 2.5)], [], seed=3)
    a = (1.0, 1.3, 1.7, 2.1, 2.5)
    ell = [f"{a[0]}*cos(u1)", f"{a[1]}*sin(u1)*cos(u2)", f"{a[2]}*sin(u1)*sin(u2)*cos(u3)",
           f"{a[3]}*sin(u1)*sin(u2)*sin(u3)*cos(u4)", f"{a[4]}*sin(u1)*sin(u2)*sin(u3)*sin(u4)"]
    build("ellipsoid", "ellipsoid in R^5 with semi-axes 1, 1.3, 1.7, 2.1, 2.5", 5, 0, ell,
          [(0.4, 2.7), (0.4, 2.7), (0.4, 2.7), (-2.5, 2.5)],
          [map_section("shear", "base", "base", ["u1 + 0.2*u2", "u2", "u3", "u4"])], seed=4, dilation=1.5)
    build("cylinder", "product cylinder S^1(1.5) x R^2 in R^4", 4, 0,
          ["1.5*cos(u1)", "1.5*sin(u1)", "u2", "u3"], [(0.0, 3.0), (-1.0, 1.0), (-1.0, 1.0)], [], seed=5)
    ds = ["sinh(u1)", "cosh(u1)*cos(u2)", "cosh(u1)*sin(u2)*cos(u3)", "cosh(u1)*sin(u2)*sin(u3)"]
    build("desitter", "de Sitter space of radius 1 in R^4_1", 4, 1, ds,
          [(-0.8, 0.8), (0.3, 2.8), (-2.5, 2.5)], [], seed=6, dilation=2.0)
    b = (1.0, 1.2, 1.5, 1.8)
    dds = [f"{b[0]}*sinh(u1)", f"{b[1]}*cosh(u1)*cos(u2)", f"{b[2]}*cosh(u1)*sin(u2)*cos(u3)",
           f"{b[3]}*cosh(u1)*sin(u2)*sin(u3)"]
    build("desitter_deformed", "Lorentzian hyperboloid -x0^2 + (x1/1.2)^2 + (x2/1.5)^2 + (x3/1.8)^2 = 1 in R^4_1",
          4, 1, dds, [(-0.5, 0.5), (0.3, 2.8), (-2.5, 2.5)], [], seed=7, dilation=1.5)
    ads = ["cosh(u1)*cos(u2)", "cosh(u1)*sin(u2)", "sinh(u1)*cos(u3)", "sinh(u1)*sin(u3)"]
    build("ads", "anti-de Sitter-like quadric -x0^2 - x1^2 + x2^2 + x3^2 = -1 in R^4_2", 4, 2, ads,
          [(0.3, 1.2), (-1.0, 1.0), (-1.0, 1.0)], [], seed=8)
    build("plane", "flat hyperplane x3 = 0 in R^4", 4, 0, ["u1", "u2", "u3", "0"],
          [(0.5, 1.5), (0.5, 1.5), (0.5, 1.5)],
          [map_section("shear", "base", "base", ["2*u1", "u2", "u3"]),
           map_section("inversion", "base", "base",
                       [f"u{i}/(u1^2 + u2^2 + u3^2)" for i in (1, 2, 3)])], seed=9)


if __name__ == "__main__":
    main()
