"""Exception types shared across the package."""


class LarkError(Exception):
    """Base class for larkms errors; carries a short machine-parsable category."""

    category = "internal"


class SpectrumFormatError(LarkError):
    """Malformed or unusable spectrum input."""

    category = "format"


class ConfigError(LarkError):
    """Missing or invalid configuration."""

    category = "config"


class ElicitationError(LarkError):
    """A data-based prior elicitation step failed; the message names the key."""

    category = "elicit"


class SamplerError(LarkError):
    """Fatal sampler diagnostic (e.g. non-finite log posterior)."""

    category = "sampler"
