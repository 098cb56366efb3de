"""Exception and warning types shared across the package."""

from __future__ import annotations


class TactwinError(Exception):
    """Base class for all errors raised by tactwin."""


class InvalidInput(TactwinError, ValueError):
    pass


class RangeExceeded(TactwinError):
    """A tangential load or field lies outside the monotone branch of the sine."""

    def __init__(self, message: str, sample_index: int | None = None):
        if sample_index is not None:
            message = f"sample {sample_index}: {message}"
        super().__init__(message)
        self.sample_index = sample_index


class SaturationWarning(UserWarning):
    """Normal compression clamped at the saturation displacement."""


class DegenerateGain(TactwinError):
    pass


class InsufficientData(TactwinError):
    pass


class FitToleranceExceeded(TactwinError):
    pass


class DegenerateFit(TactwinError):
    pass


class InvalidCalibration(TactwinError, ValueError):
    pass


class UnknownScenario(TactwinError, ValueError):
    pass


class ParseError(TactwinError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaMismatch(TactwinError):
    def __init__(self, missing: list[str] | tuple[str, ...], message: str = ""):
        self.missing = tuple(missing)
        text = "missing columns: " + ", ".join(self.missing)
        if message:
            text = f"{message}; {text}"
        super().__init__(text)
