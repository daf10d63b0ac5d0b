"""Quadratic spaces, lattices and the hyperbolic plane"""

from .hyperbolic_plane import BoundaryPoint, Geodesic, IsometryClass, KleinModel, classify_isometry
from .lattice import IntegralIsometry, Lattice
from .presets import preset
from .quadratic_space import QuadraticSpace, Signature, Subspace

__all__ = [
    'BoundaryPoint',
    'Geodesic',
    'IsometryClass',
    'KleinModel',
    'classify_isometry',
    'IntegralIsometry',
    'Lattice',
    'preset',
    'QuadraticSpace',
    'Signature',
    'Subspace',
]
