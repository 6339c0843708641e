"""Synthetic provider-format files for trainer tests.

Real German credit / HELOC sources are not bundled; these writers emit
small files in the exact provider formats so preprocessing and training are
testable offline. Tests that need the real files live in test_real_data.py
and skip unless RECOURSE_DATA_DIR is set.
"""

import numpy as np
import pytest

from recourse_trainer.datasets import GERMAN_CATALOG, GERMAN_COLUMNS, GERMAN_CONTINUOUS


def german_line(rng, label=None):
    toks = []
    for name in GERMAN_COLUMNS:
        if name in GERMAN_CONTINUOUS:
            toks.append(str(int(rng.integers(1, 80))))
        else:
            values = GERMAN_CATALOG[name]
            toks.append(values[int(rng.integers(0, len(values)))])
    if label is None:
        label = "1" if rng.random() < 0.7 else "2"
    toks.append(label)
    return " ".join(toks)


def write_german(path, n=80, seed=5):
    rng = np.random.default_rng(seed)
    path.write_text("\n".join(german_line(rng) for _ in range(n)) + "\n")
    return path


def write_heloc(path, rows, features=("f1", "f2", "f3")):
    """rows: iterable of (label, *feature values)."""
    lines = ["RiskPerformance," + ",".join(features)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture(scope="module")
def german_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("german-src")
    write_german(path / "german.data")
    return path


@pytest.fixture(scope="module")
def trained(german_dir, tmp_path_factory):
    from recourse_trainer import train_dataset

    out = tmp_path_factory.mktemp("trained")
    report = train_dataset("german", german_dir, out, seed=3, overrides={"epochs": 12})
    return report
