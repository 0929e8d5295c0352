"""Exception hierarchy shared across the package.

Each error class maps onto one CLI exit code (see ``cli.EXIT_CODES``), so
library code should raise the most specific class that applies.
"""


class DialogkitError(Exception):
    """Base class for all package errors."""


class ResourceError(DialogkitError):
    """A resource file (lexicon, manifest, template) is missing or unreadable."""


class FormatError(DialogkitError):
    """A resource or input file is readable but malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class TranscriptParseError(FormatError):
    """A transcript line could not be parsed in strict mode."""


class EmptyTranscriptError(DialogkitError):
    """A transcript yielded no utterances."""


class SchemaError(DialogkitError):
    """A JSON document violates the dialogue/pair schema.

    ``path`` names the offending location, e.g. ``turns[2].speaker``.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class EndpointError(DialogkitError):
    """A generator endpoint failed after all retries.

    ``attempts`` carries one log line per attempt for diagnosis.
    """

    def __init__(self, message, attempts=()):
        super().__init__(message)
        self.attempts = list(attempts)
