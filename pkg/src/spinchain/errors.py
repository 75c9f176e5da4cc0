"""Exception hierarchy shared by the library and the command line."""


class SpinChainError(Exception):
    """Base class for errors raised by :mod:`spinchain`."""


class ContractError(SpinChainError, ValueError):
    """An operation was called outside the setting it is defined for."""


class ResourceError(SpinChainError):
    """The requested size exceeds what the exact routines can hold."""


class RegimeError(SpinChainError, ValueError):
    """The coupling is too weak for the first-order measure to be a probability."""

    def __init__(self, message, eps_threshold=None):
        super().__init__(message)
        self.eps_threshold = eps_threshold


class ConvergenceError(SpinChainError, RuntimeError):
    """An iterative solver did not reach its tolerance."""


class InvariantViolation(SpinChainError):
    """A checked mathematical inequality or identity failed."""
