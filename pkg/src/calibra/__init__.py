"""Calibration-based model order reduction for hyperbolic conservation laws.

The package aligns traveling discontinuities of parametrized finite-volume
solutions through monotone control-point maps, then compresses the aligned
snapshot family with POD and learns the online reconstruction with small
fully-connected networks. Subpackages:

- ``grids``        Cartesian grids, scalar/conserved fields, interpolation
- ``archive``      snapshot archives on disk (manifest + raw float64 blobs)
- ``euler``        compressible Euler equations: EOS, fluxes, wave speeds
- ``weno``         fifth-order WENO reconstruction
- ``solver``       finite-volume solver (SSPRK54 in time), benchmark problems
- ``riemann``      exact solver for the 1D Riemann problem and wave positions
- ``pchip``        shape-preserving cubic Hermite interpolation
- ``mapping``      control grids and tensor-product transformation maps
- ``calibration``  residuals, constrained optimization sweeps, studies
- ``pod``          proper orthogonal decomposition with volume weighting
- ``net``          from-scratch MLP regression (Adam), difference encoding
- ``pipeline``     offline/online reduced-order model and error reports
- ``presets``      shipped benchmark configurations and config validation
- ``cli``          the ``calibra`` command line tool
"""

from calibra.grids import Grid, ScalarField, ConservedField
from calibra.archive import FieldArchive
from calibra.mapping import ControlGrid, TransformMap, build_map
from calibra.pchip import Pchip

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ScalarField",
    "ConservedField",
    "FieldArchive",
    "ControlGrid",
    "TransformMap",
    "build_map",
    "Pchip",
    "__version__",
]
