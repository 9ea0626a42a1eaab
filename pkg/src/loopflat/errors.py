"""Exception hierarchy.

Every exception carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class LoopflatError(Exception):
    exit_code = 3


class ConfigurationError(LoopflatError, ValueError):
    """Unsupported algebra family, size, case key or malformed option."""

    exit_code = 2


class ParseError(ConfigurationError):
    """A dump or config file could not be read."""


class DomainError(LoopflatError, ValueError):
    """An element does not lie in the span it was claimed to lie in."""


class ValidationError(LoopflatError, ValueError):
    """Structural identity (involutivity, commutation, ...) failed."""


class NumericalDegeneracyError(LoopflatError):
    pass


class SearchFailureError(LoopflatError):
    pass


class ObstructionError(LoopflatError):
    """Requested dimension exceeds the rank of the secondary symmetric space.

    Reported as a configuration problem: the request cannot be satisfied.
    """

    exit_code = 2


class OutsideBigCellError(LoopflatError):
    pass


class TruncationFailureError(LoopflatError):
    pass


class ConnectionOrderError(LoopflatError):
    """Maurer-Cartan form is not a Laurent polynomial of degrees -1..1."""


class InternalConsistencyError(LoopflatError):
    pass


class EmptyDomainError(LoopflatError):
    pass


class VerificationError(LoopflatError):
    exit_code = 1
