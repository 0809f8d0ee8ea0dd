"""Ice-type vertex models on Archimedean lattice hexagons."""

from .lattice import (
    DomainError,
    CapacityError,
    FlipFamily,
    HexDomain,
    LatticeKind,
    boundary_edges,
    build_domain,
    faces_by_family,
)

__version__ = "0.1.0"
