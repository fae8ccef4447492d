from __future__ import annotations

from typing import Any, Dict


class PipelineError(Exception):
    """Base class for every data/processing failure in the pipeline.

    Each subclass carries a stable UPPER_SNAKE ``code``; ``location`` points at the
    offending file row, fold or parameter so CLI messages can name it.
    """

    code = "PIPELINE_ERROR"
    severity = "ERROR"

    def __init__(self, message: str, location: str = "") -> None:
        super().__init__(message)
        self.message = message
        self.location = location

    def __str__(self) -> str:
        if self.location:
            return f"{self.location}: {self.message}"
        return self.message

    def as_dict(self) -> Dict[str, Any]:
        return {
            "severity": self.severity,
            "code": self.code,
            "location": self.location,
            "message": self.message,
        }


# signal IO and filtering

class FileMissing(PipelineError):
    code = "FILE_MISSING"


class MalformedRow(PipelineError):
    code = "MALFORMED_ROW"

    def __init__(self, message: str, location: str = "", row: int | None = None) -> None:
        super().__init__(message, location)
        self.row = row


class NonFiniteSample(MalformedRow):
    code = "NON_FINITE_SAMPLE"


class EmptyRecording(PipelineError):
    code = "EMPTY_RECORDING"


class UnsupportedRate(PipelineError):
    code = "UNSUPPORTED_RATE"


class InvalidRecording(PipelineError):
    code = "INVALID_RECORDING"


class InvalidBand(PipelineError):
    code = "INVALID_BAND"


class NonFiniteOutput(PipelineError):
    code = "NON_FINITE_OUTPUT"


class OutOfRange(PipelineError):
    code = "OUT_OF_RANGE"


# features

class DegenerateSignal(PipelineError):
    code = "DEGENERATE_SIGNAL"


class TooShort(PipelineError):
    code = "TOO_SHORT"


class TooFewRows(PipelineError):
    code = "TOO_FEW_ROWS"


# classifiers

class InsufficientClasses(PipelineError):
    code = "INSUFFICIENT_CLASSES"


class NoConvergence(PipelineError):
    code = "NO_CONVERGENCE"


class DimensionMismatch(PipelineError):
    code = "DIMENSION_MISMATCH"


class EmptyData(PipelineError):
    code = "EMPTY_DATA"


# model selection and metrics

class TooFewSamples(PipelineError):
    code = "TOO_FEW_SAMPLES"


class LengthMismatch(PipelineError):
    code = "LENGTH_MISMATCH"


class EmptyMatrix(PipelineError):
    code = "EMPTY_MATRIX"


class InvalidLabel(PipelineError):
    code = "INVALID_LABEL"


# configuration; the CLI maps this one to the usage exit code

class InvalidConfig(PipelineError):
    code = "INVALID_CONFIG"
