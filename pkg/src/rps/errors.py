"""Domain error hierarchy shared across the package.

Every error callers are expected to handle derives from RpsError so the CLI
and service layers can map the whole family to exit code 1 / HTTP error
bodies without enumerating them.
"""


class RpsError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "domain_error"


class EmptyInput(RpsError):
    """Blank text, empty sample list, or an otherwise degenerate input."""

    code = "empty_input"


class ProviderFailure(RpsError):
    """A remote embedding or LLM provider could not be reached or errored."""

    code = "provider_failure"


class DimMismatch(RpsError):
    """Vectors of different dimensionality were combined."""

    code = "dim_mismatch"


class ZeroVector(RpsError):
    """A zero vector reached an operation that requires a direction."""

    code = "zero_vector"


class EmptyCorpus(RpsError):
    code = "empty_corpus"


class DuplicateId(RpsError):
    code = "duplicate_id"


class LengthMismatch(RpsError):
    """Parallel sequences (results vs gold labels) differ in length."""

    code = "length_mismatch"


class IoFailure(RpsError):
    """Filesystem read/write failed; wraps the underlying OSError."""

    code = "io_failure"


class CorruptFile(RpsError):
    """Index file failed its magic/version/structure checks."""

    code = "corrupt_file"


class EmptyQuerySet(RpsError):
    code = "empty_query_set"


class MissingBinding(RpsError):
    """A prompt template placeholder was left unbound."""

    code = "missing_binding"

    def __init__(self, names):
        self.names = sorted(names)
        super().__init__(f"unbound placeholders: {', '.join(self.names)}")


class UnparseableCoveOutput(RpsError):
    """A verification-pipeline reply is missing a required section marker.

    Carries the raw model text for diagnostics.
    """

    code = "unparseable_cove_output"

    def __init__(self, message, raw_text):
        self.raw_text = raw_text
        super().__init__(message)


class UnparseableVerdict(RpsError):
    """The judge reply could not be mapped to correct/incorrect/unsure."""

    code = "unparseable_verdict"

    def __init__(self, message, raw_text=""):
        self.raw_text = raw_text
        super().__init__(message)


class EmptyResponse(RpsError):
    """A response with no content words reached a grounding check."""

    code = "empty_response"


class InsufficientSamples(RpsError):
    """A source pool is too small to satisfy the requested mix."""

    code = "insufficient_samples"


class MalformedRecord(RpsError):
    """A JSONL record failed validation; remembers its line number."""

    code = "malformed_record"

    def __init__(self, message, line_no):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class ConnectionFailure(RpsError):
    """The benchmark driver could not reach the target service."""

    code = "connection_failure"


class ConfigError(RpsError):
    """A configuration value is missing, malformed, or out of range."""

    code = "config_error"
