"""Exception hierarchy shared across the toolkit.

Everything raised on purpose derives from :class:`ToolkitError` so the CLI
and the HTTP layer can map failures to exit codes / status codes in one
place.  Each subclass carries enough structured context (``details`` dict)
to produce a machine readable error record.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all errors raised by this package on purpose."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_json(self) -> dict:
        out = {"error": type(self).__name__, "message": self.message}
        if self.details:
            out["details"] = self.details
        return out


class ValidationError(ToolkitError):
    """Malformed user input (documents, parameters, shapes)."""


class GridMismatchError(ValidationError):
    """Two objects live on different grids and cannot be combined."""


class ChannelError(ValidationError):
    """Unknown, duplicate or otherwise unusable channel."""


class DegenerateChannelError(ChannelError):
    """A channel has no variance (or too few samples) for the requested scaling."""


class DegenerateTensorError(ToolkitError):
    """Tensor trace too close to zero for shape measures."""


class NonFiniteError(ValidationError):
    """NaN or infinity where finite data is required."""


class TraitError(ValidationError):
    """Invalid trait primitive or expression."""


class UnsupportedTraitError(TraitError):
    """Operation not defined for this expression shape (e.g. sampling a negation)."""


class DiagramTooLargeError(ToolkitError):
    """Persistence diagram exceeds the exact bottleneck matching budget."""


class DictionaryError(ValidationError):
    """Bad dictionary learning configuration or degenerate training data."""


class FormatError(ValidationError):
    """Broken or unknown on-disk artifact."""


class StabilityViolation(ToolkitError):
    """The distance chain check failed outside tolerance."""
