"""Exception hierarchy shared by the library and the command line front-end.

Every error carries a stable ``code`` string and a CLI exit status so the
front-end can turn any failure into a structured report without guessing.
"""

from __future__ import annotations

from typing import Any


class PDKError(Exception):
    """Base class for all library errors."""

    code = "error"
    exit_status = 4

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        return {"error": self.code, "message": self.message, "details": self.details}


class ParameterError(PDKError, ValueError):
    """An input value lies outside its documented domain."""

    code = "parameter"
    exit_status = 2


class SpecError(ParameterError):
    """A network or detector description violates a structural invariant."""

    code = "spec"


class ConfigError(ParameterError):
    """A configuration file is missing, unreadable or malformed."""

    code = "config"


class GridError(ParameterError):
    """A grid is unsuitable for the requested operation."""

    code = "grid"


class CoverageError(PDKError):
    """The supplied grid does not cover the support of the integrand."""

    code = "coverage"
    exit_status = 4


class WindowLeakageError(PDKError):
    """A function handed to the Fourier transform does not decay at the window edges."""

    code = "window_leakage"
    exit_status = 4


class SingularNetworkError(PDKError):
    """The linear system for the discrete-state amplitudes is singular."""

    code = "singular"
    exit_status = 4


class TruncationError(PDKError):
    """An infinite sum could not be truncated to the requested tolerance."""

    code = "truncation"
    exit_status = 4


class InfeasibleError(PDKError):
    """The requested design has no solution."""

    code = "infeasible"
    exit_status = 3


class InfeasibleWindowError(InfeasibleError):
    """The target wavepacket cannot be projected onto within the detection window."""

    code = "infeasible_window"


class BandGapError(InfeasibleError):
    """The filter transmission vanishes inside the support of the target spectrum."""

    code = "band_gap"

    def __init__(self, message: str, frequency: float, **details: Any) -> None:
        super().__init__(message, frequency=frequency, **details)
        self.frequency = frequency


class DegenerateDetectorError(InfeasibleError):
    """The trigger spectrum is entirely blocked by the filter."""

    code = "degenerate_detector"
