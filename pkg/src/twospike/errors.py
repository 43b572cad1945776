"""Exception types raised across the package.

Every error carries a short machine-readable ``code`` so the CLI can map
failures onto exit statuses without string matching.
"""


class TwoSpikeError(Exception):
    code = "ERROR"


class ValidationError(TwoSpikeError, ValueError):
    """Bad user input; the CLI maps these to exit status 2."""

    code = "VALIDATION"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(ValidationError):
    code = "DOMAIN"


class RegimeViolation(ValidationError):
    code = "REGIME_VIOLATION"


class BlockMismatch(ValidationError):
    code = "BLOCK_MISMATCH"


class DimensionMismatch(ValidationError):
    code = "DIMENSION_MISMATCH"


class NumericalError(TwoSpikeError, ArithmeticError):
    """A well-posed request that has no usable numerical answer (exit status 3)."""

    code = "NUMERICAL"


class KTooSmall(NumericalError):
    code = "K_TOO_SMALL"


class SamplerStall(NumericalError):
    code = "SAMPLER_STALL"


class EmptySelection(NumericalError):
    code = "EMPTY_SELECTION"


class HighVariance(NumericalError):
    """Raised only when a HIGH_VARIANCE warning is escalated (``--strict``)."""

    code = "HIGH_VARIANCE"
