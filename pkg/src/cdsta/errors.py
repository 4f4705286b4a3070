"""Exception types raised by the engine."""


class CDError(Exception):
    """Base class for all engine errors."""


class RejectedInput(CDError, ValueError):
    """An argument violates a documented precondition."""


class SingularityError(CDError, ArithmeticError):
    """A formula hits a vanishing denominator or a negative radicand."""


class DegeneracyError(CDError, ArithmeticError):
    """Two levels are closer than the configured gap tolerance."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class GaugeDiscontinuityError(CDError, ArithmeticError):
    """A finite-difference construction produced a visibly non-Hermitian result."""


class FlatObjectiveError(CDError, ArithmeticError):
    """The variational objective does not depend on the ansatz coefficients."""


class NormDriftError(CDError, ArithmeticError):
    """State norm drifted beyond the abort threshold during propagation."""


class TailGuardError(CDError, ArithmeticError):
    """Population in the top Fock levels exceeded the truncation guard."""
