"""Exception hierarchy shared across the toolchain."""

from __future__ import annotations


class VenusError(Exception):
    """Base class for all toolchain errors."""


class GraphValidationError(VenusError):
    """A graph violates a structural invariant (dangling id, empty name, ...)."""


class GraphParseError(VenusError):
    """Input could not be parsed into a graph."""

    def __init__(self, message: str, *, byte_offset: int | None = None, line: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset
        self.line = line


class DslSyntaxError(GraphParseError):
    """Line-level syntax error in the graph DSL."""


class ExtractionError(VenusError):
    """No usable graph could be extracted from model output."""

    def __init__(self, message: str, *, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class EditOpError(VenusError):
    """A graph edit op could not be applied."""

    def __init__(self, message: str, *, op_index: int | None = None, selector: object = None):
        super().__init__(message)
        self.op_index = op_index
        self.selector = selector


class ConfigError(VenusError):
    """Invalid or missing configuration."""


class EndpointError(VenusError):
    """A remote MLLM endpoint failed after exhausting retries."""


class BackendProtocolError(VenusError):
    """An editing backend violated the wire protocol."""


class RunError(VenusError):
    """An edit run failed; ``stage`` names the pipeline stage that broke."""

    def __init__(self, message: str, *, stage: str):
        super().__init__(message)
        self.stage = stage


class NumericOverflowError(VenusError):
    """A sandbox recurrence produced a non-finite value."""

    def __init__(self, message: str, *, step: int):
        super().__init__(message)
        self.step = step


class MetricError(VenusError):
    """Images are not comparable (shape mismatch, too small, ...)."""


# errors that mean "the caller's input/config is wrong" (CLI exit 2 / HTTP 400),
# as opposed to runtime failures (CLI exit 1 / HTTP 500)
USAGE_ERRORS = (ConfigError, GraphParseError, GraphValidationError, EditOpError)
