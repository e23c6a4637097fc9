"""Referee-checked topological games, Cantor constructions and fractal checks."""
from .space import Ball, GradedScalar, REAL_LINE, SHIFT, Space, parse_ball, scale_ball

__version__ = "0.1.0"
__all__ = ["Ball", "GradedScalar", "REAL_LINE", "SHIFT", "Space", "parse_ball", "scale_ball"]
