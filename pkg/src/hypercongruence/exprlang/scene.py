"""Scene files: a sectioned key=value text format describing surfaces and maps.

Example::

    # unit 3-sphere in R^4
    [space] dim=4 signature=0
    [surface.s3]
      vars = u1,u2,u3
      embed = cos(u1); sin(u1)*cos(u2); sin(u1)*sin(u2)*cos(u3); sin(u1)*sin(u2)*sin(u3)
      domain = 0.3:2.8, 0.3:2.8, 0.3:2.8
    [map.id] from=s3 to=s3 rule=u1;u2;u3
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..ambient import AmbientSpace
from .nodes import evaluate
from .parser import LanguageError, ParseError, parse_expr


class SceneError(LanguageError):
    """Structural problem in a scene file.

    ``kind`` is one of ``syntax``, ``expression``, ``arity``, ``duplicate``,
    ``dangling``, ``missing``, ``domain``.
    """

    def __init__(self, kind, message, issues=()):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.issues = list(issues)


@dataclass(frozen=True)
class SurfaceSpec:
    name: str
    chart_vars: tuple
    embed: tuple  # n+1 Expr
    domain: tuple  # n (lo, hi) pairs


@dataclass(frozen=True)
class MapSpec:
    name: str
    source: str
    target: str
    rule: tuple  # n Expr over the source chart variables


@dataclass(frozen=True)
class SceneModel:
    space: AmbientSpace
    surfaces: dict = field(default_factory=dict)
    maps: dict = field(default_factory=dict)


_HEADER = re.compile(r"^\s*\[([^\]]*)\]")
_KEY = re.compile(r"(?<![\w.])([A-Za-z_]\w*)\s*=")

_KEYS = {
    "space": {"dim", "signature"},
    "surface": {"vars", "embed", "domain"},
    "map": {"from", "to", "rule"},
}


def _strip_comments(text):
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def _sections(text):
    """Yield (header, body, line number) triples."""
    current = None
    body = []
    start = 0
    for lineno, line in enumerate(_strip_comments(text).splitlines(), 1):
        m = _HEADER.match(line)
        if m:
            if current is not None:
                yield current, " ".join(body), start
            current = m.group(1).strip()
            body = [line[m.end():]]
            start = lineno
        elif line.strip():
            if current is None:
                raise SceneError("syntax", f"line {lineno}: content before the first section")
            body.append(line)
    if current is not None:
        yield current, " ".join(body), start


def _pairs(body, kind, where):
    matches = list(_KEY.finditer(body))
    if body.strip() and (not matches or body[: matches[0].start()].strip()):
        raise SceneError("syntax", f"{where}: expected key=value, got {body.strip()!r}")
    out = {}
    for m, nxt in zip(matches, matches[1:] + [None]):
        key = m.group(1)
        value = body[m.end(): nxt.start() if nxt else len(body)].strip()
        if key not in _KEYS[kind]:
            raise SceneError("syntax", f"{where}: unknown key {key!r}")
        if key in out:
            raise SceneError("duplicate", f"{where}: key {key!r} given twice")
        out[key] = value
    missing = _KEYS[kind] - set(out)
    if missing:
        raise SceneError("missing", f"{where}: missing key(s) {', '.join(sorted(missing))}")
    return out


def _expr(text, variables, where):
    try:
        return parse_expr(text, variables)
    except ParseError as err:
        raise SceneError("expression", f"{where}: {err}", err.issues) from err


def _int(text, where, key):
    try:
        return int(text)
    except ValueError:
        raise SceneError("syntax", f"{where}: {key} must be an integer, got {text!r}") from None


def _split(text, sep):
    return [part.strip() for part in text.split(sep)]


def parse_scene(text: str) -> SceneModel:
    """Parse and validate a scene file."""
    space = None
    raw_surfaces = {}
    raw_maps = {}
    for header, body, line in _sections(text):
        kind, _, name = header.partition(".")
        kind = kind.strip()
        name = name.strip()
        where = f"[{header}] (line {line})"
        if kind not in _KEYS:
            raise SceneError("syntax", f"{where}: unknown section kind {kind!r}")
        if kind == "space":
            if name:
                raise SceneError("syntax", f"{where}: [space] takes no name")
            if space is not None:
                raise SceneError("duplicate", f"{where}: second [space] section")
            kv = _pairs(body, kind, where)
            dim = _int(kv["dim"], where, "dim")
            sig = _int(kv["signature"], where, "signature")
            try:
                space = AmbientSpace(dim, sig)
            except ValueError as err:
                raise SceneError("arity", f"{where}: {err}") from None
            continue
        if not re.fullmatch(r"[A-Za-z_][\w-]*", name):
            raise SceneError("syntax", f"{where}: bad or missing name {name!r}")
        table = raw_surfaces if kind == "surface" else raw_maps
        if name in raw_surfaces or name in raw_maps:
            raise SceneError("duplicate", f"{where}: name {name!r} already used")
        table[name] = (_pairs(body, kind, where), where)

    if space is None:
        raise SceneError("missing", "no [space] section")
    n = space.dim_total - 1

    surfaces = {}
    for name, (kv, where) in raw_surfaces.items():
        chart = tuple(_split(kv["vars"], ","))
        if len(chart) != n:
            raise SceneError("arity", f"{where}: {len(chart)} chart variables, expected {n}")
        if len(set(chart)) != n or not all(re.fullmatch(r"[A-Za-z_]\w*", v) for v in chart):
            raise SceneError("syntax", f"{where}: bad chart variable list {kv['vars']!r}")
        comps = _split(kv["embed"], ";")
        if len(comps) != space.dim_total:
            raise SceneError("arity", f"{where}: {len(comps)} embed components, expected {space.dim_total}")
        embed = tuple(_expr(c, chart, f"{where} embed[{i}]") for i, c in enumerate(comps))
        bounds = _split(kv["domain"], ",")
        if len(bounds) != n:
            raise SceneError("arity", f"{where}: {len(bounds)} domain intervals, expected {n}")
        domain = []
        for i, b in enumerate(bounds):
            lo, sep, hi = b.partition(":")
            if not sep:
                raise SceneError("syntax", f"{where}: domain interval {b!r} needs lo:hi")
            lo_v = float(evaluate(_expr(lo, (), f"{where} domain[{i}]"), {}))
            hi_v = float(evaluate(_expr(hi, (), f"{where} domain[{i}]"), {}))
            if not lo_v < hi_v:
                raise SceneError("domain", f"{where}: empty interval {b!r}")
            domain.append((lo_v, hi_v))
        surfaces[name] = SurfaceSpec(name, chart, embed, tuple(domain))

    maps = {}
    for name, (kv, where) in raw_maps.items():
        src, dst = kv["from"], kv["to"]
        for end in (src, dst):
            if end not in surfaces:
                raise SceneError("dangling", f"{where}: unknown surface {end!r}")
        comps = _split(kv["rule"], ";")
        if len(comps) != len(surfaces[dst].chart_vars):
            raise SceneError(
                "arity",
                f"{where}: {len(comps)} rule components, target has {len(surfaces[dst].chart_vars)} chart variables",
            )
        chart = surfaces[src].chart_vars
        rule = tuple(_expr(c, chart, f"{where} rule[{i}]") for i, c in enumerate(comps))
        maps[name] = MapSpec(name, src, dst, rule)

    return SceneModel(space, surfaces, maps)


def format_expr_list(exprs) -> str:
    return "; ".join(str(e) for e in exprs)
