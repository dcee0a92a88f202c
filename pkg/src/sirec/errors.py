"""Exception types shared across the package."""


class SirecError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SirecError, ValueError):
    """A configuration object or parameter violates its invariants."""


class SchemaError(SirecError, ValueError):
    """A file or payload does not match the expected schema/version."""


class TrainingError(SirecError, ValueError):
    """The training data or setup cannot produce a valid model."""


class EvaluationError(SirecError, RuntimeError):
    """An evaluation run failed; message carries the iteration index."""
