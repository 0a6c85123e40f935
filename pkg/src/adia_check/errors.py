"""Exception hierarchy shared by all modules."""


class AdiaCheckError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(AdiaCheckError, ValueError):
    pass


class DegenerateSpectrumError(AdiaCheckError):
    """Raised when the level gap |E+ - E-| falls below the gap floor."""


class UnsupportedModelError(AdiaCheckError, TypeError):
    pass


class IntegrationDivergedError(AdiaCheckError):
    """Unitarity drift of the propagator exceeded the configured bound."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConfigError(AdiaCheckError):
    """Scenario configuration problem; ``path`` names the offending field."""

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class EnsembleMemberError(AdiaCheckError):
    """A single ensemble member failed; ``index`` identifies it."""

    def __init__(self, index, cause):
        super().__init__(f"ensemble member {index}: {cause}")
        self.index = index
        self.cause = cause
