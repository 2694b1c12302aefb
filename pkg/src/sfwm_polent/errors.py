"""Exception types shared across the package.

``ConfigError`` maps to CLI exit code 1; every ``NumericalError`` maps to 2.
"""


class ConfigError(ValueError):
    """Bad configuration, missing file or malformed input data."""


class NumericalError(RuntimeError):
    """A computation could not produce a valid result."""


class InvalidStateError(ValueError):
    """Input matrix violates the density-matrix invariants."""


class PhaseUndefinedError(NumericalError):
    """The HH/VV coherence is too small for its phase to mean anything."""


class OutOfWindowError(ValueError):
    """Frequency outside the validity window of a dispersion model."""


class NoRootError(NumericalError):
    """Dispersion does not change sign on the requested bracket."""


class UnbalanceableError(NumericalError):
    """HH and VV generation probabilities cannot be equalized."""


class InsufficientCountsError(NumericalError):
    """Dataset has too few counts to reconstruct a state."""


class ReconstructionError(NumericalError):
    """Maximum-likelihood reconstruction failed."""
