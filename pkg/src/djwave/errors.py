"""Exception hierarchy shared by all solver modules."""


class WaveError(Exception):
    """Base class for every error raised by the package."""


class StagnantBackgroundError(WaveError, ValueError):
    """The background current vanishes somewhere on the water column."""


class ResolutionError(WaveError, ValueError):
    """The requested grid cannot resolve the structure of the input."""


class FamilyError(WaveError, ValueError):
    """A laminar-family parameter lies outside the admissible range."""


class ParameterError(WaveError, ValueError):
    """A scalar parameter violates its documented range."""


class DomainError(WaveError, ValueError):
    """The truncated strip is too short for the requested wave."""


class StagnationError(WaveError):
    """A height field reached the stagnation floor h_s <= floor."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ConvergenceError(WaveError):
    """Newton iteration failed; ``history`` holds the residual norms."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class IntegrationError(WaveError):
    """The fixed-step integrator would need an unreasonable step count."""


class SpectralScanError(WaveError):
    """Eigenvalue bracketing failed after extending the scan window."""


class TangentError(WaveError):
    """The bordered tangent system is singular."""


class StepError(WaveError):
    """The continuation corrector failed at the minimum step size."""


class InversionError(WaveError, ValueError):
    """A stream-function column is not monotone and cannot be inverted."""


class ConfigError(WaveError, ValueError):
    """A run configuration failed to parse or validate."""
