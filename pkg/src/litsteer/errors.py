"""Error taxonomy shared by every module.

Each error exposes a stable ``code`` (its class name) and belongs to one of
four categories the HTTP layer maps onto status codes: bad input -> 400,
missing entity -> 404, wrong state -> 409, provider failure -> 502.
"""
from __future__ import annotations


class LitsteerError(Exception):
    """Base class for all package errors."""

    http_status = 500

    @property
    def code(self) -> str:
        return type(self).__name__


class ValidationFailure(LitsteerError):
    """Malformed or out-of-range input."""

    http_status = 400


class MissingEntity(LitsteerError):
    """Reference to something that does not exist."""

    http_status = 404


class StateConflict(LitsteerError):
    """Operation is illegal in the current state."""

    http_status = 409


class UpstreamFailure(LitsteerError):
    """A provider failed or returned output we cannot use."""

    http_status = 502


class PersistenceFailure(LitsteerError):
    """Snapshot or event-log storage failed."""

    http_status = 500


# --- bad input ----------------------------------------------------------

class EmptyQuery(ValidationFailure):
    pass


class InvalidRequest(ValidationFailure):
    pass


class EmptyText(ValidationFailure):
    pass


class EmptyBatch(ValidationFailure):
    pass


class EmptyKeywordSet(ValidationFailure):
    pass


class EmptyInput(ValidationFailure):
    pass


class PayloadKindMismatch(ValidationFailure):
    pass


class DimensionMismatch(ValidationFailure):
    pass


class ZeroVector(ValidationFailure):
    pass


class SizeMismatch(ValidationFailure):
    pass


class TooFewPoints(ValidationFailure):
    pass


# --- missing entity -----------------------------------------------------

class UnknownSession(MissingEntity):
    pass


class UnknownPipeline(MissingEntity):
    pass


class UnknownNode(MissingEntity):
    pass


class UnknownParent(MissingEntity):
    pass


class UnknownPaper(MissingEntity):
    pass


class NotProjected(MissingEntity):
    pass


# --- wrong state --------------------------------------------------------

class NotPending(StateConflict):
    pass


class PipelineComplete(StateConflict):
    pass


class InvalidStatus(StateConflict):
    pass


class NoOutput(StateConflict):
    pass


class AlreadyExplored(StateConflict):
    pass


class ReviewNotApproved(StateConflict):
    pass


class NothingToSynthesize(StateConflict):
    pass


# --- provider failures --------------------------------------------------

class ProviderError(UpstreamFailure):
    """Network, HTTP, authorization, or timeout failure of an LLM provider."""

    def __init__(self, message: str, retryable: bool = True) -> None:
        super().__init__(message)
        self.retryable = retryable


class HttpError(UpstreamFailure):
    pass


class FeedParse(UpstreamFailure):
    pass


class ReviewParse(UpstreamFailure):
    pass


class ProposalParse(UpstreamFailure):
    pass


class CitationUnresolved(UpstreamFailure):
    pass


class CitesRejected(UpstreamFailure):
    pass


# --- persistence --------------------------------------------------------

class StorageError(PersistenceFailure):
    pass


class UnknownSchemaVersion(PersistenceFailure):
    pass


class CorruptSnapshot(PersistenceFailure):
    pass
