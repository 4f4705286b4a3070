"""Counterdiabatic driving and shortcuts to adiabaticity for small quantum systems."""

from . import cdrive, dynamics, hamiltonians, invariant, operators
from .cdrive import (
    cd_gauge_model,
    cd_matrix_element,
    cd_spectral,
    cd_variational,
    route_table,
    verify_cd,
)
from .dynamics import Trajectory, fidelity, phases, populations, propagate
from .errors import (
    CDError,
    DegeneracyError,
    FlatObjectiveError,
    GaugeDiscontinuityError,
    NormDriftError,
    RejectedInput,
    SingularityError,
    TailGuardError,
)
from .hamiltonians import ModelSpec, build_model
from .invariant import InvariantRecord, di_residual, propagate_invariant
from .operators import EigenFrame, eigenframe, eigenframes
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"

__all__ = [
    "CDError",
    "DEFAULT",
    "DegeneracyError",
    "EigenFrame",
    "FlatObjectiveError",
    "GaugeDiscontinuityError",
    "InvariantRecord",
    "ModelSpec",
    "NormDriftError",
    "RejectedInput",
    "SingularityError",
    "TailGuardError",
    "Tolerances",
    "Trajectory",
    "build_model",
    "cd_gauge_model",
    "cd_matrix_element",
    "cd_spectral",
    "cd_variational",
    "cdrive",
    "di_residual",
    "dynamics",
    "eigenframe",
    "eigenframes",
    "fidelity",
    "hamiltonians",
    "invariant",
    "operators",
    "phases",
    "populations",
    "propagate",
    "propagate_invariant",
    "route_table",
    "verify_cd",
]
