"""Fully numerical, monomial-agnostic approximate vanishing-ideal computation.

The package fits a degree-stratified pair (F, G) of nonvanishing and
approximately vanishing polynomials to a point set, with the spurious
vanishing problem handled by a pluggable normalization (plain VCA baseline,
coefficient norm, or the data-dependent gradient norm).  Post-processing
covers gradient-based basis reduction and variety-dimension estimation; a
CLI exposes fitting, evaluation, reduction and the benchmark harnesses.
"""

from .core import Basis, PointSet, Poly, linear_combine, multiply
from .engine import EngineConfig, FitReport, NormalizationMode, evaluate, fit
from .errors import (
    ContractViolation,
    DegenerateInputError,
    InternalInvariantViolation,
    MavikError,
    ResourceLimitError,
)

__all__ = [
    "Basis",
    "PointSet",
    "Poly",
    "linear_combine",
    "multiply",
    "EngineConfig",
    "FitReport",
    "NormalizationMode",
    "evaluate",
    "fit",
    "MavikError",
    "ContractViolation",
    "InternalInvariantViolation",
    "ResourceLimitError",
    "DegenerateInputError",
]

__version__ = "0.1.0"
