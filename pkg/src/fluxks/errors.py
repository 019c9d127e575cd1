"""Exception types shared across the package."""


class FluxKSError(Exception):
    """Base class for all package errors."""


class ConfigError(FluxKSError):
    """Invalid or inconsistent run configuration."""


class NegativeProfile(FluxKSError):
    """Initial-data profile evaluated negative before renormalization."""


class InvalidRegime(FluxKSError):
    """Operation called outside its parameter regime."""


class NegativeInput(FluxKSError):
    """Field has negative nodes beyond the roundoff floor."""


class InconsistentCache(FluxKSError):
    """Cached potential does not belong to the current density field."""


class StepTooSmall(FluxKSError):
    """Stable step size fell below dt_min."""


class NonMonotone(FluxKSError):
    """Mass profile decreased beyond tolerance; profile is corrupted."""


class DivergentIntegrand(FluxKSError):
    """Moment integrand is non-integrable near s = 0."""


class InsufficientGrowth(FluxKSError):
    """Series has no terminal growth window to fit."""


class EmptyInterval(FluxKSError):
    """No admissible (a, b) pair exists for these parameters."""


class InvalidP(FluxKSError):
    """Norm exponent must satisfy p > N/2."""


class DivergentTail(FluxKSError):
    """Bound integral diverges (gamma <= 1)."""


class InsufficientInitialMass(FluxKSError):
    """Initial moment too small for the superlinear term to dominate the drift."""


class SolverFailure(FluxKSError):
    """Wraps an error raised mid-run, carrying the partial diagnostics."""

    def __init__(self, message, series=None, cause=None):
        super().__init__(message)
        self.series = series
        self.cause = cause
