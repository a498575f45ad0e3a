"""Exception types shared across the package."""


class NeedletestError(Exception):
    """Base class for all package errors."""


class InvalidAlpha(NeedletestError):
    """Decay exponent below the admissible range (alpha >= 1/2)."""


class PositivityViolation(NeedletestError):
    """Synthesized density dips below the positivity floor."""


class EmptyShell(NeedletestError):
    """No lattice point falls in the requested frequency shell."""


class EnvelopeBreach(NeedletestError):
    """Rejection-sampling envelope found below the density; envelope bug."""


class RejectionStall(NeedletestError):
    """Rejection sampler acceptance rate collapsed; pathological density."""


class DimensionMismatch(NeedletestError):
    """Inputs disagree on the torus dimension q."""


class NonpositiveVariance(NeedletestError):
    """Normalization requested with variance <= 0."""


class InsufficientBandlimit(NeedletestError):
    """Density bandlimit too small for the requested spectral sum."""


class ShellTooLarge(NeedletestError):
    """Shell exceeds the configured feasibility cap for the chosen path."""


class TooFewSamples(NeedletestError):
    """Empirical distance requested on fewer than two samples."""


class InsufficientPoints(NeedletestError):
    """Regression requested on fewer than three configurations."""
