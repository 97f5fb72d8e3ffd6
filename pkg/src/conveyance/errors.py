"""Exception types shared across the toolkit."""


class ConveyanceError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ConveyanceError):
    """Invalid experiment configuration.

    Carries the full list of violated constraints so a single validation
    pass reports everything at once.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NumericError(ConveyanceError):
    """An iterative numerical procedure failed to converge.

    ``context`` holds solver-specific diagnostics (iteration counts,
    last shift, residuals).
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class GridMismatchError(ConveyanceError, ValueError):
    """Operands live on different grids."""


class InvalidLevelError(ConveyanceError, ValueError):
    """Requested bound-state index is outside the available range."""


class NoMetastableWellError(ConveyanceError, ValueError):
    """The tilted potential has no local minimum at this slope."""


class NoTurningPointsError(ConveyanceError, ValueError):
    """Energy outside the window where classical turning points exist."""


class LevelNotFoundError(ConveyanceError, ValueError):
    """No semiclassical quantization root in the metastable window."""


class FitDomainError(ConveyanceError, ValueError):
    """Fit window contains values outside the fit's domain (e.g. p <= 0)."""


class NoResonanceError(ConveyanceError, ValueError):
    """No usable peak found for a resonance-shape fit."""
