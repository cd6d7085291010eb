"""Exception hierarchy shared by every module.

Each class maps onto one CLI exit code (see ``walkcorr.cli``).
"""


class WalkcorrError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(WalkcorrError, ValueError):
    """An argument lies outside the supported numerical domain."""


class ParameterError(WalkcorrError, ValueError):
    """Invalid user-supplied parameter (epsilon, qubit count, ...)."""


class ValidationError(WalkcorrError, ValueError):
    """A Hamiltonian document or matrix failed validation."""


class FormatError(ValidationError):
    """Malformed Hamiltonian document."""


class HermiticityError(ValidationError):
    """Stored entries violate H[j, k] == conj(H[k, j])."""


class SparsityError(ValidationError):
    """A row or column holds more than ``d`` nonzeros."""


class InfeasiblePlanError(WalkcorrError):
    """No parameter choice satisfies the planner constraints."""


class DivergenceError(WalkcorrError):
    """A correction series cannot converge (s(W) >= 1)."""


class ResourceError(WalkcorrError):
    """Requested problem exceeds desk-scale limits."""


class DegenerateError(WalkcorrError):
    """Degenerate input: zero Hamiltonian, zero series, ..."""


class PreconditionError(WalkcorrError):
    """An internal precondition was violated (usually a planner bug)."""


class ConsistencyError(WalkcorrError):
    """Two independent routes to the same quantity disagree."""
