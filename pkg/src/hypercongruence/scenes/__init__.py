"""Bundled scene files and helpers for writing moved or scaled copies of a surface."""

from __future__ import annotations

from importlib import resources

import numpy as np

from ..ambient import Motion
from ..exprlang import parse_scene, to_text

SUFFIX = ".scene"


def bundled_names():
    files = resources.files(__name__)
    return sorted(p.name[: -len(SUFFIX)] for p in files.iterdir() if p.name.endswith(SUFFIX))


def bundled_text(name):
    path = resources.files(__name__) / f"{name}{SUFFIX}"
    if not path.is_file():
        raise KeyError(f"no bundled scene named {name!r}; available: {', '.join(bundled_names())}")
    return path.read_text(encoding="utf-8")


def load_bundled(name):
    return parse_scene(bundled_text(name))


def _num(x):
    return repr(float(x))


def moved_components(components, motion: Motion):
    """Text of A f + b for component expressions (Expr or text) of f."""
    texts = [c if isinstance(c, str) else to_text(c) for c in components]
    out = []
    for a, row in enumerate(motion.linear):
        terms = [f"{_num(w)}*({t})" for w, t in zip(row, texts) if w != 0.0]
        if motion.translation[a] != 0.0:
            terms.append(_num(motion.translation[a]))
        out.append(" + ".join(terms) if terms else "0")
    return out


def scaled_components(components, c):
    texts = [comp if isinstance(comp, str) else to_text(comp) for comp in components]
    return [f"{_num(c)}*({t})" for t in texts]


def surface_section(name, chart_vars, components, domain):
    dom = ", ".join(f"{_num(lo)}:{_num(hi)}" for lo, hi in domain)
    return (
        f"[surface.{name}]\n"
        f"  vars = {','.join(chart_vars)}\n"
        f"  embed = {'; '.join(components)}\n"
        f"  domain = {dom}\n"
    )


def map_section(name, source, target, rule):
    return f"[map.{name}] from={source} to={target} rule={';'.join(rule)}\n"


def motion_matrix_text(motion: Motion):
    """Comment lines recording a motion, for scene files built from one."""
    A = np.asarray(motion.linear)
    lines = ["# linear part, row by row:"]
    lines += ["#   " + " ".join(_num(x) for x in row) for row in A]
    lines.append("# translation: " + " ".join(_num(x) for x in motion.translation))
    return "\n".join(lines) + "\n"
