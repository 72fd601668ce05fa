"""Exception types shared across the package."""


class RelayCodeError(Exception):
    """Base class for all package errors."""


class ZeroInverse(RelayCodeError, ZeroDivisionError):
    """Raised when inverting the zero element of a finite field."""


class DimensionMismatch(RelayCodeError, ValueError):
    """Raised when packet or coefficient dimensions disagree."""


class InsufficientRank(RelayCodeError):
    """Raised when decoding is attempted before M degrees of freedom arrived."""


class InvalidState(RelayCodeError, ValueError):
    """Raised for an (i, j, k) triple that violates the validity constraints."""


class AbsorbingState(RelayCodeError):
    """Raised when asking for the transition deltas of a terminated state."""


class NeverCompletes(RelayCodeError):
    """The receiver can never collect M degrees of freedom.

    ``state`` and ``family`` name the first state found that cannot be left
    (or cannot reach absorption), when known.
    """

    def __init__(self, message, state=None, family=None):
        super().__init__(message)
        self.state = state
        self.family = family
