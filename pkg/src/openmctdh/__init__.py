"""Variational MCTDH propagation of Fock-space density operators.

A complex absorbing potential turns unitary many-body dynamics into a
trace-preserving master equation whose jump operators are the mode
annihilators.  This package discretizes the single-particle space on a
periodic FFT grid, enumerates the truncated Fock basis, and propagates the
coupled orbital/Galerkin-matrix equations of motion with a variational
splitting scheme, alongside a fixed-basis full-CI reference integrator.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, InternalConsistencyError, NumericalBlowupError
from .fock import FockBasis, FockState, enumerate_basis
from .grid1d import GridFunction, GridSpec, SPFSet, make_grid
from .liouville import BlockDensityMatrix, LindbladOperators, PureState
from .mctdh import MCTDHState, Potentials
from .propagate import PropagationConfig, TrajectoryRecord

__all__ = [
    "__version__",
    "ConvergenceError",
    "InternalConsistencyError",
    "NumericalBlowupError",
    "FockBasis",
    "FockState",
    "enumerate_basis",
    "GridFunction",
    "GridSpec",
    "SPFSet",
    "make_grid",
    "BlockDensityMatrix",
    "LindbladOperators",
    "PureState",
    "MCTDHState",
    "Potentials",
    "PropagationConfig",
    "TrajectoryRecord",
]
