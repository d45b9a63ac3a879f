"""Exception hierarchy shared by every stage of the toolkit."""


class PnqrngError(Exception):
    """Base class; ``stage`` names the pipeline stage that raised it."""

    stage = "general"


class InvalidModelError(PnqrngError, ValueError):
    stage = "physics"


class ResolutionError(PnqrngError, ValueError):
    stage = "physics"


class UnderdeterminedError(PnqrngError, ValueError):
    stage = "variance"


class DegenerateFitError(PnqrngError, ValueError):
    stage = "variance"


class InsufficientDataError(PnqrngError, ValueError):
    stage = "analysis"


class DegenerateRangeError(PnqrngError, ValueError):
    stage = "digitize"


class RateError(PnqrngError, ValueError):
    stage = "digitize"


class NoExtractableEntropyError(PnqrngError, ValueError):
    stage = "entropy"


class LengthMismatchError(PnqrngError, ValueError):
    stage = "extractor"


class FormatError(PnqrngError, ValueError):
    stage = "io"


class ConfigError(PnqrngError, ValueError):
    stage = "config"
