"""Exception taxonomy, mapped to CLI exit codes in latentclass.cli."""


class LatentClassError(Exception):
    """Base class for all library errors."""


class ConfigError(LatentClassError):
    """Invalid model/sampler configuration or option combination."""


class DataError(LatentClassError):
    """Input data violates its declared schema or support."""


class NumericError(LatentClassError):
    """Numerical breakdown inside the sampler (e.g. non-SPD conditional)."""
