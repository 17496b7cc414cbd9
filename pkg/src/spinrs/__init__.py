"""Reduced spin Ruijsenaars-Schneider type system on the Heisenberg double of SU(n).

Subpackages are plain modules: ``matrixcore`` (small dense linear algebra),
``heisenberg`` (Iwasawa factors, dressing, moment map), ``constraint``
(gauge-slice solution), ``phasespace`` (reduced states, Lax matrix,
invariants), ``dynamics`` (equations of motion and solvers), ``sutherland``
(the scaling limit), ``poissonb`` (Poisson structure on B) and ``cli``.
"""

from .dynamics import FlowConfig, Trajectory, integrate, project_solve, project_trajectory
from .errors import (
    ConfigError,
    DecompositionFailure,
    IndexOutOfStructure,
    NonRegularTorus,
    NotHermitian,
    NotPositiveDefinite,
    NotUnipotent,
    NotUnitary,
    SpinRSError,
    ToleranceExceeded,
)
from .phasespace import InvariantLedger, ReducedState, h_red, invariant_ledger, lax
from .sutherland import SutherlandState, h_suth, lax_suth

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DecompositionFailure",
    "FlowConfig",
    "IndexOutOfStructure",
    "InvariantLedger",
    "NonRegularTorus",
    "NotHermitian",
    "NotPositiveDefinite",
    "NotUnipotent",
    "NotUnitary",
    "ReducedState",
    "SpinRSError",
    "SutherlandState",
    "ToleranceExceeded",
    "Trajectory",
    "h_red",
    "h_suth",
    "integrate",
    "invariant_ledger",
    "lax",
    "lax_suth",
    "project_solve",
    "project_trajectory",
]
