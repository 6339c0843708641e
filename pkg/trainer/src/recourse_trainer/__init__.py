"""Credit-risk MLP training with export to the recourse-rules format."""

from .errors import FormatDrift, MissingSource, TrainerError, TrainingDiverged
from .train import SPECS, TrainReport, TrainSpec, train_dataset

__version__ = "0.1.0"

__all__ = [
    "FormatDrift",
    "MissingSource",
    "SPECS",
    "TrainerError",
    "TrainingDiverged",
    "TrainReport",
    "TrainSpec",
    "train_dataset",
]
