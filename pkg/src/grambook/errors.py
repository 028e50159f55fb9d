"""Exception hierarchy shared across the toolkit."""


class GrambookError(Exception):
    """Base class for all toolkit errors."""


# corpus ingestion

class AlignmentError(GrambookError):
    """Transcription and gloss word counts differ."""


class EmptyLineError(GrambookError):
    """A required line of an IGT block is blank."""


class MalformedBlockError(GrambookError):
    """An example block failed gloss alignment; carries line numbers."""

    def __init__(self, message: str, line_start: int, line_end: int):
        super().__init__(message)
        self.line_start = line_start
        self.line_end = line_end


class FormatError(GrambookError):
    """A data file line does not match the expected column layout."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class MissingLanguageError(GrambookError):
    """A requested language code has no rows in the feature table."""


# prompt construction

class MissingGlossError(GrambookError):
    """A gloss-format parallel prompt was requested for a pair without a gloss."""


class EmptyPoolError(GrambookError):
    """Retrieval was asked to score an empty example pool."""


class DuplicateInstructionError(GrambookError):
    """A prompt was composed with more than one instruction section."""


# grammaticality

class UncorruptibleError(GrambookError):
    """No corruption of the sentence can differ from the original."""


# metrics

class EmptyReferenceError(GrambookError):
    """ChrF++ was given an empty reference."""


class LengthMismatchError(GrambookError):
    """Hypothesis and reference lists have different lengths."""


# analysis

class EmptyTestSetError(GrambookError):
    """Coverage was requested against an empty test set."""


class DegenerateInputError(GrambookError):
    """Regression input is too small or constant."""


class DomainError(GrambookError):
    """Numerical kernel argument outside its domain."""


# llm client

class ContextLengthError(GrambookError):
    """The endpoint rejected the request as exceeding its context window."""


class AuthError(GrambookError):
    """The endpoint rejected the request's credentials."""


class ExhaustedRetriesError(GrambookError):
    """All retry attempts against the endpoint failed."""


# cli

class ConfigError(GrambookError):
    """Experiment config is malformed or references missing data."""


class MissingSummaryError(GrambookError):
    """Report generation found no usable summary files."""
