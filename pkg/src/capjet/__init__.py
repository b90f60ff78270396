"""Axisymmetric capillary jets: Dirichlet-Neumann operator, Zakharov dynamics,
linear stability and paradifferential diagnostics on a periodic grid."""
from .errors import (CapjetError, ConfigError, GridMismatch, InvalidGrid, NoConvergence,
                     NonHermitianMultiplier, NonpositiveRadius, OddPointCount, StepRejected,
                     WindowTooShort)
from .grid import Grid, make_grid

__version__ = "0.1.0"

__all__ = [
    "CapjetError", "ConfigError", "GridMismatch", "InvalidGrid", "NoConvergence",
    "NonHermitianMultiplier", "NonpositiveRadius", "OddPointCount", "StepRejected",
    "WindowTooShort", "Grid", "make_grid",
]
