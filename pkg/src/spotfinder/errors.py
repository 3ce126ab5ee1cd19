"""Exception types shared across the pipeline."""


class SpotFinderError(Exception):
    """Base class for all package errors."""


class DomainError(SpotFinderError, ValueError):
    """An argument violates a documented precondition or invariant."""


class RetryableFetchError(SpotFinderError):
    """Transient imagery failure (timeouts, 5xx); the request may be retried."""


class FatalFetchError(SpotFinderError):
    """Non-retryable imagery failure (bad credential, quota exhausted)."""


class BackendError(SpotFinderError):
    """A detector backend failed on a specific input."""

    def __init__(self, message, provenance=None):
        super().__init__(message)
        self.provenance = provenance


class ViaParseError(SpotFinderError):
    """The annotation project document could not be parsed."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class RegionError(ViaParseError):
    """A region inside an otherwise valid annotation file is malformed."""

    def __init__(self, message, image=None):
        super().__init__(message)
        self.image = image


class UnmappableLabelError(SpotFinderError):
    """An annotation label has no counterpart in the closed class set."""

    def __init__(self, labels):
        labels = sorted(set(labels))
        super().__init__(f"labels not in the closed class set: {labels}")
        self.labels = labels


class NotFoundError(SpotFinderError):
    """Lookup by id or survey failed."""


class AlreadyVerifiedError(SpotFinderError):
    """A verdict was submitted for a record that already has one."""


class ImmutableRecordError(SpotFinderError):
    """Attempted to overwrite a verified record."""
