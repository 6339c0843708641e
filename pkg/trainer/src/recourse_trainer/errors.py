class TrainerError(Exception):
    """Base class for trainer failures."""


class FormatDrift(TrainerError):
    """Source file does not match the provider's published format."""

    def __init__(self, column: str, detail: str):
        self.column = column
        super().__init__(f"column {column!r}: {detail}")


class MissingSource(TrainerError):
    """No recognizable raw file for the requested dataset."""


class TrainingDiverged(TrainerError):
    """Loss became non-finite during optimization."""
