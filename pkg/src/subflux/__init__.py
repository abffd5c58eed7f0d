"""subflux: 2D compressible Euler on unstructured quads.

High-order CPR (flux reconstruction) with a priori subcell limiting: cells
flagged by a modal-energy indicator switch to a second-order nonuniform
nonlinear-weighted (CNNW2) finite-difference scheme on subcells.
"""

__version__ = "0.1.0"

from .basis import element_basis
from .cases import init_case
from .driver import Solver, SolverConfig
from .mesh import load_mesh, make_strip_mesh

__all__ = ["element_basis", "init_case", "Solver", "SolverConfig",
           "load_mesh", "make_strip_mesh", "__version__"]
