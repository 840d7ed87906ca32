"""Expression language for charts and maps, plus the scene file format."""

from .nodes import (
    EvalError,
    Expr,
    differentiate,
    evaluate,
    evaluate_many,
    substitute,
    to_text,
)
from .parser import Issue, LanguageError, ParseError, parse_expr
from .scene import MapSpec, SceneError, SceneModel, SurfaceSpec, parse_scene

__all__ = [
    "EvalError",
    "Expr",
    "Issue",
    "LanguageError",
    "MapSpec",
    "ParseError",
    "SceneError",
    "SceneModel",
    "SurfaceSpec",
    "differentiate",
    "evaluate",
    "evaluate_many",
    "parse_expr",
    "parse_scene",
    "substitute",
    "to_text",
]
