"""Exception types shared across the package."""


class DetfieldError(Exception):
    """Base class for all package-specific errors."""


class MalformedSpectral(DetfieldError):
    """Spectral symbol is structurally unusable (overlapping intervals, bad grid)."""


class AdmissibilityLost(DetfieldError):
    """A kernel's spectrum left the admissible range [0, 1]."""


class EnvelopeViolated(DetfieldError):
    """A perturbation matrix exceeds its declared decay envelope."""


class DuplicateSites(DetfieldError):
    """Site list for a correlation minor contains repeated indices."""


class OrderTooLarge(DetfieldError):
    """Requested cumulant order exceeds the supported maximum."""


class NumericallySingular(DetfieldError):
    """Determinant underflow prevented stable log-branch tracking."""


class TooManySites(DetfieldError):
    """Exhaustive subset enumeration requested on too large a lattice."""


class MissingFourier(DetfieldError):
    """Test function carries no usable frequency-domain representation."""


class DegenerateProjection(DetfieldError):
    """Sequential sampler lost numerical rank while updating its basis."""


class VarianceTooSmall(DetfieldError):
    """Exact variance is too close to zero for a normalized statistic."""


class SigmaZero(DetfieldError):
    """White-noise normalization is degenerate (indicator symbol)."""


class MZero(DetfieldError):
    """Variance spectral density vanishes identically on the probe grid."""


class ConfigError(DetfieldError):
    """Base for configuration problems; carries per-line diagnostics."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class ParseError(ConfigError):
    """Config text could not be parsed."""


class ValidationError(ConfigError):
    """Config parsed but describes an invalid experiment."""
