"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numeric domain problems with 3, audit failures (strict mode)
with 1.
"""


class SolitonFlowError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SolitonFlowError):
    """Bad user input: unknown soliton, invalid config key, N too small."""


class DomainError(SolitonFlowError):
    """Numeric domain violation: point outside chart, t past horizon,
    non-positive density sample."""


class ChartDomainError(DomainError):
    """A chart point left the coordinate validity region."""


class DegenerateImmersionError(DomainError):
    """Discrete tangent with vanishing metric norm."""


class StepSizeError(SolitonFlowError):
    """Requested time step violates the parabolic CFL guard.  The caller
    is expected to halve the step and retry."""


class ExtinctionSignal(SolitonFlowError):
    """The evolving curve collapsed below the length threshold.  Carries
    the clock value at which the run stopped."""

    def __init__(self, clock, length):
        super().__init__(f"curve extinct at clock {clock:.6g} (length {length:.3g})")
        self.clock = clock
        self.length = length


class NoBlowupSignal(SolitonFlowError):
    """Curvature history shows no growth; no singular time to estimate."""


class AuditFailure(SolitonFlowError):
    """A diagnostic audit failed (strict mode raises this)."""
