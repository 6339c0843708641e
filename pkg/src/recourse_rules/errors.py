"""Exception types raised by the engine.

Every error carries enough location detail (row, feature, field) for the
caller to report actionable messages; the service layer maps them onto
HTTP status codes and the CLI onto exit codes.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""


class SchemaError(EngineError):
    """Invalid feature schema or schema sidecar."""


class MissingColumn(EngineError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"dataset is missing required column {column!r}")


class UnknownCategory(EngineError):
    def __init__(self, row: int, feature: str, value: str):
        self.row = row
        self.feature = feature
        self.value = value
        super().__init__(
            f"row {row}: value {value!r} is not a declared category of feature {feature!r}"
        )


class UnparsableNumber(EngineError):
    def __init__(self, row: int, feature: str, value: str):
        self.row = row
        self.feature = feature
        self.value = value
        super().__init__(
            f"row {row}: cell {value!r} of continuous feature {feature!r} is not a finite number"
        )


class DegenerateFeature(EngineError):
    def __init__(self, feature: str):
        self.feature = feature
        super().__init__(f"continuous feature {feature!r} has min == max; cannot fit bins")


class ThresholdBelowFloor(EngineError):
    def __init__(self, threshold: float, row_count: int):
        self.threshold = threshold
        self.row_count = row_count
        super().__init__(
            f"support threshold {threshold} is below the observable floor 1/{row_count}"
        )


class DimensionMismatch(EngineError):
    """Layer shapes in a weights file do not chain, or the output is not binary."""


class EncodingMismatch(EngineError):
    def __init__(self, feature: str, detail: str):
        self.feature = feature
        super().__init__(f"input encoding for feature {feature!r} is inconsistent: {detail}")


class NotCovered(EngineError):
    """apply_then was called on an input that does not satisfy the rule's If conditions."""


class NormalizerViolation(EngineError):
    """A four-term objective evaluation went negative; the normalizers are too small."""


class IncompatibleRuns(EngineError):
    """compare() was given runs over different datasets or models."""


class ConfigError(EngineError):
    """Run configuration failed validation; `errors` maps field name to message."""

    def __init__(self, errors: dict[str, str]):
        self.errors = dict(errors)
        detail = "; ".join(f"{k}: {v}" for k, v in sorted(self.errors.items()))
        super().__init__(f"invalid run configuration: {detail}")


class StageFailure(EngineError):
    """A pipeline stage aborted; partial artifacts are flagged in the report."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} failed: {cause}")
