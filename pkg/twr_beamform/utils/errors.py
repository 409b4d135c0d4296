"""Exception hierarchy for the TWR beamforming toolkit."""


class TwrBeamformError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(TwrBeamformError, ValueError):
    """Operands have incompatible shapes."""


class DegenerateDesignError(TwrBeamformError, ValueError):
    """A design has no usable direction (all-zero channel, zero power, ...)."""


class NumericalError(TwrBeamformError, ValueError):
    """A matrix violates a numerical precondition (not Hermitian, not PD, singular)."""


class ConfigError(TwrBeamformError, ValueError):
    """Experiment configuration is invalid."""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []
