"""Dynamics of polynomial self-maps of C^2 tangent to the identity.

Maps are parsed from text or built from named families, their characteristic
directions are computed, and orbits are classified as converging to the
origin, converging to the line {z = w}, escaping, or undecided.
"""
from .chardir import (CharDirReport, DegreewiseStatus, DicriticalError, ProjDirection, beta_branch,
                      classify_directions, degreewise, director)
from .orbit import (OrbitClass, OrbitOutcome, OrbitParams, classify, classify_many, diagnostics,
                    iterate, trajectory)
from .parser import ParseError, builtin, format_map, parse_map
from .poly import SUM_DIFF, Complex2, HomPoly2, LinearChange, MapError, PolyMap2, conjugate_linear
from .render import BasinGrid, Window, grid_to_ppm, render_grid

__version__ = "0.1.0"

__all__ = [
    "BasinGrid",
    "CharDirReport",
    "Complex2",
    "DegreewiseStatus",
    "DicriticalError",
    "HomPoly2",
    "LinearChange",
    "MapError",
    "OrbitClass",
    "OrbitOutcome",
    "OrbitParams",
    "ParseError",
    "PolyMap2",
    "ProjDirection",
    "SUM_DIFF",
    "Window",
    "beta_branch",
    "builtin",
    "classify",
    "classify_directions",
    "classify_many",
    "conjugate_linear",
    "degreewise",
    "diagnostics",
    "director",
    "format_map",
    "grid_to_ppm",
    "iterate",
    "parse_map",
    "render_grid",
    "trajectory",
]
