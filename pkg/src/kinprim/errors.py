"""Exception types shared across the toolkit."""


class KinprimError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(KinprimError):
    """A file or document does not match the expected schema."""


class ValidationError(KinprimError):
    """Data is schema-conformant but violates an invariant (NaN, negative fps, ...)."""


class TooShortError(ValidationError):
    """A recording has fewer than 2 frames."""


class ParameterError(KinprimError):
    """An operation was called with parameters outside its precondition."""


class InsufficientDataError(KinprimError):
    """Not enough data to perform the operation (e.g. fewer samples than clusters)."""
