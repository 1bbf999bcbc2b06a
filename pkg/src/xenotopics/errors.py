"""Exception hierarchy shared by all modules."""


class XenoTopicsError(Exception):
    """Base class for every error raised by this package."""


class ParseError(XenoTopicsError, ValueError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class DuplicateId(XenoTopicsError, ValueError):
    def __init__(self, doc_id, row=None):
        self.doc_id = doc_id
        self.row = row
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"duplicate id {doc_id!r}{where}")


class UnknownLabel(XenoTopicsError, ValueError):
    pass


class EmptyVocabulary(XenoTopicsError, ValueError):
    pass


class TooFewExamples(XenoTopicsError, ValueError):
    pass


class MissingClass(XenoTopicsError, ValueError):
    pass


class LengthMismatch(XenoTopicsError, ValueError):
    pass


class EmptyInput(XenoTopicsError, ValueError):
    pass


class EmptyCorpus(XenoTopicsError, ValueError):
    pass


class UnknownToken(XenoTopicsError, KeyError):
    pass


class NotNormalized(XenoTopicsError, ValueError):
    pass


class UnstagedRecord(XenoTopicsError, ValueError):
    pass


class TooFewWords(XenoTopicsError, ValueError):
    pass


class ConfigError(XenoTopicsError, ValueError):
    pass


class PipelineError(XenoTopicsError):
    """Wraps an error raised inside a pipeline step, naming the step."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"[{step}] {type(cause).__name__}: {cause}")
