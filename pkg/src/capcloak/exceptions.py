"""Error taxonomy shared across the package."""


class CapcloakError(Exception):
    """Base class for all package errors."""


class ValidationError(CapcloakError):
    """An input violated a documented invariant (named in the message)."""


class ManifestError(CapcloakError):
    """A manifest file could not be parsed.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EncoderError(CapcloakError):
    """An encoder backend failed; the underlying cause is chained."""


class CaptionerError(CapcloakError):
    """The captioning backend failed to produce a caption."""


class CapabilityError(CapcloakError):
    """A bundle does not support a requested capability (e.g. gradients)."""


class CoverageError(CapcloakError):
    """No word of a phrase is covered by the embedding table."""


class PipelineError(CapcloakError):
    """A text-normalization backend failed; the cause is chained."""


class ConfigError(CapcloakError):
    """Unknown or unsupported configuration value."""


class OptimizationError(CapcloakError):
    """The attack loop hit a non-finite objective; names the iteration."""
