"""Exception types shared across the package.

Names follow the error vocabulary of the public operation contracts; all
inherit from TorusnsError so callers can catch the whole family at once.
"""


class TorusnsError(Exception):
    """Base class for all package-specific errors."""


class GridMismatch(TorusnsError):
    """Two fields built on incompatible grids were combined."""


class NonZeroMean(TorusnsError):
    """An operation requiring a zero-mean field received one with a mean."""


class NonZeroSpaceMean(TorusnsError):
    """A space-time field has nonzero spatial mean where none is allowed."""


class ResonantMode(TorusnsError):
    """A retained angle mode has a vanishing (or near-vanishing) divisor."""


class NoConvergence(TorusnsError):
    """Fixed-point iteration hit the iteration cap before the tolerance.

    Carries the diagnostics collected so far.
    """

    def __init__(self, message, iterations=0, residual_history=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual_history = list(residual_history or [])


class NegativeTime(TorusnsError):
    """The heat semigroup is only defined for non-negative times."""


class BlowUp(TorusnsError):
    """A perturbation left the orbital-stability ball during evolution.

    Carries the partial decay series recorded up to the failing step.
    """

    def __init__(self, message, series=None):
        super().__init__(message)
        self.series = series


class StepTooLarge(TorusnsError):
    """The time step fails the explicit-nonlinearity stability heuristic."""


class InsufficientSamples(TorusnsError):
    """A sampled time series does not cover the requested interval."""


class EmptySeries(TorusnsError):
    """A reduction over an empty time series was requested."""


class SnapshotMismatch(TorusnsError):
    """A field snapshot on disk does not match the expected grid."""


class ConfigParse(TorusnsError):
    """A run-configuration file is malformed or violates an invariant."""
