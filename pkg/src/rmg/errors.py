"""Exception types shared across the package."""
from __future__ import annotations

__all__ = [
    "RmgError",
    "PanelError",
    "TargetingError",
    "NotConvergedError",
    "RecursionFailure",
    "LikelihoodError",
    "EstimationError",
    "AnalyticsError",
]


class RmgError(Exception):
    """Base class for all errors raised by this package."""


class PanelError(RmgError):
    """Malformed or inconsistent return-panel data."""


class TargetingError(RmgError):
    """Covariance targeting failed (degenerate spectrum, bad window, ...)."""


class NotConvergedError(TargetingError):
    """Power iteration did not reach the requested residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class RecursionFailure(RmgError):
    """The covariance recursion has no admissible update at some step.

    Carries the step index ``t``, a machine-readable ``status`` code from
    :mod:`rmg._kernels`, and a ``diagnostics`` dict with the projected
    quantities (A0, A1, D2, overlap-root candidates) at the failing step.
    """

    def __init__(
        self,
        message: str,
        *,
        t: int | None = None,
        status: int | None = None,
        diagnostics: dict | None = None,
    ):
        super().__init__(message)
        self.t = t
        self.status = status
        self.diagnostics = diagnostics or {}


class LikelihoodError(RmgError):
    """Non-finite likelihood contribution."""

    def __init__(
        self,
        message: str,
        *,
        t: int | None = None,
        v0: float | None = None,
        v1: float | None = None,
    ):
        super().__init__(message)
        self.t = t
        self.v0 = v0
        self.v1 = v1


class EstimationError(RmgError):
    """Optimizer or standard-error machinery failed."""


class AnalyticsError(RmgError):
    """Invalid input to a post-fit analytics routine."""
