"""Exception hierarchy for the engine.

Each pipeline stage raises a distinct subclass so the CLI can map failures
to stage-specific exit codes.
"""


class HopQAError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class ConfigError(HopQAError):
    exit_code = 2


class GraphError(HopQAError):
    exit_code = 3


class GraphFormatError(GraphError):
    """Malformed graph file; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class UnknownEntityError(GraphError):
    pass


class DecompositionError(HopQAError):
    """Unusable decomposition output; carries the raw LLM text."""

    exit_code = 4

    def __init__(self, message: str, raw_output: str = ""):
        super().__init__(message)
        self.raw_output = raw_output


class ScorerBackendError(HopQAError):
    exit_code = 5


class GatewayError(HopQAError):
    exit_code = 6


class RenderError(GatewayError):
    pass


class AnswerParseError(HopQAError):
    exit_code = 7
