"""Exception hierarchy shared by every module."""


class MedSpeechError(Exception):
    """Base class for domain errors (CLI maps these to exit code 1)."""


# audio_core
class MalformedHeader(MedSpeechError):
    pass


class UnsupportedEncoding(MedSpeechError):
    pass


class OutOfRange(MedSpeechError):
    pass


class IoFailure(MedSpeechError):
    pass


class UnsupportedRate(MedSpeechError):
    pass


class EmptyBuffer(MedSpeechError):
    pass


class InvalidBuffer(MedSpeechError, ValueError):
    pass


# eq_filters
class FrequencyOutOfRange(MedSpeechError, ValueError):
    pass


# denoiser / augment
class BufferTooShort(MedSpeechError):
    pass


class RateMismatch(MedSpeechError):
    pass


class SilentSignal(MedSpeechError):
    pass


class LengthMismatch(MedSpeechError):
    pass


# wer
class EmptyReference(MedSpeechError):
    def __init__(self, message="reference has no words", index=None):
        if index is not None:
            message = f"pair {index}: {message}"
        super().__init__(message)
        self.index = index


class EmptyCorpus(MedSpeechError):
    pass


# dataset
class MissingColumn(MedSpeechError):
    def __init__(self, column):
        super().__init__(f"manifest is missing required column {column!r}")
        self.column = column


class MalformedRow(MedSpeechError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(MedSpeechError):
    def __init__(self, record_id, line):
        super().__init__(f"line {line}: duplicate record id {record_id!r}")
        self.record_id = record_id
        self.line = line


# inference
class BackendFailure(MedSpeechError):
    """Anything that went wrong talking to an ASR or LLM backend."""


class Timeout(BackendFailure):
    pass


class TransportFailure(BackendFailure):
    pass


class BackendError(BackendFailure):
    def __init__(self, status, body):
        super().__init__(f"backend returned HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class EmptyTranscription(BackendFailure):
    pass


class UnparseableResponse(BackendFailure):
    pass


class UnknownFingerprint(BackendFailure):
    pass


# pipeline
class StageError(MedSpeechError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
