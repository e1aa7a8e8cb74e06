"""Free-boundary dam seepage on high-contrast media: fine characteristics/duality
solver and a GMsFEM coarse solver built from local spectral problems."""
from .driver import DamProblem, SolverConfig, energy_error, run_to_steady, sweep
from .gmsfem import CoarseSpace, build_coarse_space
from .grid import BoundaryPartition, CoarseMesh, FineMesh, Tag, build_coarse_mesh, build_fine_mesh
from .permeability import PermeabilityField, make_field

__all__ = [
    "BoundaryPartition", "CoarseMesh", "CoarseSpace", "DamProblem", "FineMesh",
    "PermeabilityField", "SolverConfig", "Tag", "build_coarse_mesh", "build_coarse_space",
    "build_fine_mesh", "energy_error", "make_field", "run_to_steady", "sweep",
]

__version__ = "0.1.0"
