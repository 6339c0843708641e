"""Serialize a trained torch MLP in the engine's interchange format.

Training standardizes raw (continuous) input columns; the interchange
format has no preprocessing hooks, so the standardization is folded into
the first linear layer at export: W' = W/sigma, b' = b - W (mu/sigma).
One-hot columns carry mu=0, sigma=1 and pass through unchanged. Dropout
exists only as torch modules and vanishes with them; the exported file is
plain {weights, bias} layers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from recourse_rules.model import MlpWeights, save_model
from recourse_rules.schema import InputEncoding

FAVORABLE_CLASS = 1


def standardization(x_train: np.ndarray, encoding: InputEncoding) -> tuple[np.ndarray, np.ndarray]:
    """Per-column (mu, sigma) over the training rows; identity for one-hot."""
    mu = np.zeros(x_train.shape[1])
    sigma = np.ones(x_train.shape[1])
    for enc in encoding.per_feature:
        if enc.kind != "raw":
            continue
        col = enc.columns[0]
        mu[col] = x_train[:, col].mean()
        std = x_train[:, col].std()
        sigma[col] = std if std > 0 else 1.0
    return mu, sigma


def to_weights(
    model: torch.nn.Sequential,
    mu: np.ndarray,
    sigma: np.ndarray,
    encoding: InputEncoding,
) -> MlpWeights:
    layers = [
        (m.weight.detach().numpy().astype(np.float64), m.bias.detach().numpy().astype(np.float64))
        for m in model
        if isinstance(m, torch.nn.Linear)
    ]
    w0, b0 = layers[0]
    layers[0] = (w0 / sigma[None, :], b0 - w0 @ (mu / sigma))
    return MlpWeights(tuple(layers), FAVORABLE_CLASS, encoding)


def export_model(
    path: str | Path,
    model: torch.nn.Sequential,
    mu: np.ndarray,
    sigma: np.ndarray,
    encoding: InputEncoding,
) -> MlpWeights:
    weights = to_weights(model, mu, sigma, encoding)
    save_model(path, weights)
    return weights
