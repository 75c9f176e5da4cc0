"""Single-flip dynamics of the one-dimensional Ising chain.

Exact stationary measures, the low-temperature expansion of the irreversible
chain around its zero-temperature limit, Catalan-number closed forms for the
first-order term, and Monte Carlo estimates of tunneling times.
"""

from .core import Boundary, ModelParams, SpinConfig
from .errors import (
    ContractError,
    ConvergenceError,
    InvariantViolation,
    RegimeError,
    ResourceError,
    SpinChainError,
)
from .kernels import KernelKind, assemble
from .stationary import exact_stationary, gibbs, tv_distance

__all__ = [
    "Boundary",
    "ContractError",
    "ConvergenceError",
    "InvariantViolation",
    "KernelKind",
    "ModelParams",
    "RegimeError",
    "ResourceError",
    "SpinChainError",
    "SpinConfig",
    "assemble",
    "exact_stationary",
    "gibbs",
    "tv_distance",
]

__version__ = "0.1.0"
