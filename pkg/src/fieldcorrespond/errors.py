"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so keeping the taxonomy
small and explicit matters more than fine-grained subclassing.
"""


class FieldCorrespondError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(FieldCorrespondError, ValueError):
    """Array shapes or axis counts do not agree."""


class WindowError(FieldCorrespondError, ValueError):
    """A site or sub-window falls outside the available data window."""


class CommutationError(FieldCorrespondError, ValueError):
    """A matrix tuple (or mixing matrix) fails a required commutation check."""


class NumericRangeError(FieldCorrespondError, ValueError):
    """Inputs exceed the numeric range the implementation can represent."""


class ConfigError(FieldCorrespondError, ValueError):
    """A run configuration is malformed or violates the schema."""


class VerificationError(FieldCorrespondError):
    """A verification command found residuals or checks out of tolerance."""
