"""Rigidity of hypersurfaces in pseudo-Euclidean space: curvature, bending and congruence checks."""

__version__ = "0.1.0"

from .ambient import AmbientSpace, Motion, inner, is_isotropic
from .exprlang import parse_expr, parse_scene
from .surface import GeometryError, ImmersionPatch, chart_grid

__all__ = [
    "AmbientSpace",
    "GeometryError",
    "ImmersionPatch",
    "Motion",
    "__version__",
    "chart_grid",
    "inner",
    "is_isotropic",
    "parse_expr",
    "parse_scene",
]
