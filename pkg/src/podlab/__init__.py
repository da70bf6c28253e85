"""POD Galerkin reduced-order models for 1D heat and Burgers problems with P1 finite elements."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateEnsembleError,
    DimensionError,
    InvalidMeshError,
    NewtonConvergenceError,
    PodlabError,
    SnapshotFileError,
    SolverError,
)
from .fem1d import Mesh1D, assemble_mass, assemble_stiffness, build_mesh  # noqa: E402
from .pde_solvers import BurgersProblem, HeatProblem, NewtonSettings, solve_burgers, solve_heat  # noqa: E402
from .pod import PodBasis, pod_basis  # noqa: E402
from .snapshots import build_ensemble  # noqa: E402

__all__ = [
    "BurgersProblem",
    "ConfigError",
    "DegenerateEnsembleError",
    "DimensionError",
    "HeatProblem",
    "InvalidMeshError",
    "Mesh1D",
    "NewtonConvergenceError",
    "NewtonSettings",
    "PodBasis",
    "PodlabError",
    "SnapshotFileError",
    "SolverError",
    "assemble_mass",
    "assemble_stiffness",
    "build_ensemble",
    "build_mesh",
    "pod_basis",
    "solve_burgers",
    "solve_heat",
]
