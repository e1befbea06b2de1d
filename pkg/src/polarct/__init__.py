"""CT reconstruction on uniformly sampled polar (2D) and cylindrical (3D) grids.

The grid keeps every cell at the same area, and rotating the scan only
shifts chord azimuths, so view 0 is all that has to be intersected.  The
package covers the grid, the geometry kernels, a first-view tracer, the
Sp-MART solver, phantoms, quality metrics, and a Cartesian Siddon baseline
used in the benchmarks.
"""

from ._backend import BACKEND
from .errors import (ConfigurationError, DegenerateLineError, InputError,
                     NumericalError)
from .grid import GridSpec, RingLayout, to_cartesian, uspg_to_cg_map
from .scan import ScanGeometry, cone_grid, fan_grid, standard_cone, standard_fan
from .solver import ProjectionSet, SolverConfig, reconstruct
from .tracer import FirstViewCache, precompute_first_view, trace_line, trace_view

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigurationError", "DegenerateLineError", "FirstViewCache",
    "GridSpec", "InputError", "NumericalError", "ProjectionSet", "RingLayout",
    "ScanGeometry", "SolverConfig", "cone_grid", "fan_grid", "precompute_first_view",
    "reconstruct", "standard_cone", "standard_fan", "to_cartesian", "trace_line",
    "trace_view", "uspg_to_cg_map",
]
