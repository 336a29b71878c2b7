"""Cauchy-kernel biorthogonal polynomial lattice: moment tables, determinant
families, recurrence and transformation identities, Lax operators, and the
quartic lattice equation, in exact rational or arbitrary-precision float
arithmetic."""

from .numerics import (ConfigError, DegeneracyError, ExtentError,
                       TolerancePolicy)
from .moments import (MomentTable, build_base_table, build_jacobi,
                      synthetic_generic, synthetic_structured)
from .detkit import DetContext, eval_det

__version__ = "0.1.0"

__all__ = ["ConfigError", "DegeneracyError", "ExtentError", "TolerancePolicy",
           "MomentTable", "build_base_table", "build_jacobi",
           "synthetic_generic", "synthetic_structured",
           "DetContext", "eval_det", "__version__"]
