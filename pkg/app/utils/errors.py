"""Exception types raised by the simulator services."""


class QJumpError(Exception):
    """Base class for all simulator failures"""


class NormalizationError(QJumpError, ValueError):
    """A normalized state was required"""


class NonPhysicalStateError(QJumpError, ValueError):
    """Density matrix is not Hermitian, not unit trace, or not positive"""


class ZeroRateError(QJumpError, ValueError):
    """No emission is possible (zero rate or zero reset vector)"""


class ClosedFormNotApplicable(QJumpError, ValueError):
    """Preconditions of a closed-form expression do not hold"""


class SolverError(QJumpError):
    """Numerical solver failed to produce a trustworthy result"""


class ConfigError(QJumpError, ValueError):
    """Run configuration is semantically invalid"""
