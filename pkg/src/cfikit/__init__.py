"""Convex function intervals on a grid."""

from ._accel import BACKEND
from .cfi import (Cfi, ExtremeReport, Saturation, contains, cutoff_utility, detect_structure,
                  falsify_extremality, make_majorization_cfi, majorization_cfi_from_integrals,
                  verify_extreme)
from .errors import (CfiError, FalsificationError, GridMismatchError, InvalidCfiError,
                     NotAffinelyBoundedError, NotConvexError, PreconditionError, SolverError,
                     StructureError)
from .grid_fn import Grid, GridFunction, SlopeInterval, cav, chord, tangent, vex
from .lp import LpProblem, LpStatus, cfi_lp, simplex_solve
from .measure import SignedMeasure, leq_cx, leq_cx_pointmass, leq_dcx, leq_icx
from .solve import (Bounded, CellKind, concavify_solve, design_lower_boundary, linearity_check,
                    verify_optimality)

__version__ = "0.1.0"
