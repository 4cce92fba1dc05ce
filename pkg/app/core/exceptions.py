from typing import Any, Dict, Optional


class SpectrumGameError(ValueError):
    """Base class for every domain error raised by the solvers."""


class DegenerateAllocationError(SpectrumGameError):
    pass


class InfeasibleAllocationError(SpectrumGameError):
    pass


class FlowSpecificationError(SpectrumGameError):
    pass


class RegimeError(SpectrumGameError):
    pass


class InvalidSelectionError(SpectrumGameError):
    pass


class PreconditionError(SpectrumGameError):
    pass


class InfeasibleRegionError(SpectrumGameError):
    pass


class NonInteriorError(SpectrumGameError):
    pass


class UnsupportedRegimeError(SpectrumGameError):
    pass


class ConfigError(SpectrumGameError):
    pass


class ResolutionError(SpectrumGameError):
    """
    Raised when the numerical backward induction does not settle.
    `diagnostics` carries the last refinement values so callers can report them.
    """

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
