"""Exception types raised by the thinfilm package."""


class ThinFilmError(Exception):
    """Base class for all package-specific errors."""


class NonZeroMean(ThinFilmError):
    """An operation expecting a mean-free field received one with mass."""


class InsufficientResolution(ThinFilmError):
    """A grid is too coarse for a lossless spectral round-trip."""


class SeriesDivergence(ThinFilmError):
    """Series evaluation requested outside its radius of convergence."""


class PointwiseDegeneracy(ThinFilmError):
    """The film height reached zero on the evaluation grid."""


class EnergyTooLarge(ThinFilmError):
    """Energy argument at or above the mean film height; constants diverge."""


class NoPositiveAmplitude(ThinFilmError):
    """The certificate fails even for vanishing initial data."""


class LinearSolveSingular(ThinFilmError):
    """The implicit per-mode solve is singular at some wavenumber."""

    def __init__(self, wavenumber: int, message: str | None = None):
        self.wavenumber = wavenumber
        super().__init__(message or f"implicit solve singular at k={wavenumber}")


class StepsizeUnderflow(ThinFilmError):
    """Adaptive stepping hit dt_min with the error still above tolerance."""


class InsufficientSamples(ThinFilmError):
    """A trajectory does not carry enough recorded data for the analysis."""


class CertificateMismatch(ThinFilmError):
    """Certificate and trajectory were produced with different inputs."""


class HalfWidthUnsupported(ThinFilmError):
    """Even reflection is only available for the half-width pi."""


class ConfigError(ThinFilmError):
    """A run configuration file could not be parsed or validated."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
