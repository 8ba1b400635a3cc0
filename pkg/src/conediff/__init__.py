"""Curve diffusion and polyharmonic flows of open curves in a planar cone."""

from .geometry import (
    ArcSpec,
    Cone,
    DiscreteCurve,
    area,
    average_curvature,
    build_tables,
    length,
    make_arc,
    oscillation_of_curvature,
    rotation_number,
)

__version__ = "0.1.0"
