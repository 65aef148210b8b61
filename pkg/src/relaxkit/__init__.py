"""Numerical tests and certificates for linear relaxation systems.

A relaxation system is a stable LTI system whose feedthrough is symmetric
positive semidefinite and whose impulse response is completely monotone.
The subpackages test that property several equivalent ways, discretize
the Hankel operator to certify cyclic monotonicity, evaluate the
intrinsic storage functional and build passivity certificates.
"""

from .errors import (DocumentError, DomainError, NonUnique, NotModal, NumericError,
                     PoleError, RelaxkitError, UnstableForHankel)
from .model import StateSpaceModel, Trajectory

__version__ = "0.1.0"

__all__ = [
    "StateSpaceModel", "Trajectory", "RelaxkitError", "DomainError", "PoleError",
    "UnstableForHankel", "NotModal", "NonUnique", "NumericError", "DocumentError",
]
