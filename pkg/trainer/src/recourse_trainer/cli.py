"""Command-line entry point.

Exit codes: 0 success, 2 configuration problem (unknown dataset, missing or
malformed source file), 3 training failure (diverged).
"""

import os
import sys

import click

from .errors import FormatDrift, MissingSource, TrainingDiverged
from .train import SPECS, train_dataset


@click.group()
def main():
    """Train credit-risk models and export them for recourse mining."""


@main.command("train")
@click.option("--dataset", required=True, type=click.Choice(sorted(SPECS)))
@click.option(
    "--data-dir",
    default=lambda: os.environ.get("RECOURSE_DATA_DIR"),
    help="directory with the raw provider files (default: $RECOURSE_DATA_DIR)",
)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=None, help="override the 200-epoch default")
def train_cmd(dataset, data_dir, out_dir, seed, epochs):
    """Preprocess, train and export one dataset's model."""
    if not data_dir:
        click.echo("error: --data-dir or RECOURSE_DATA_DIR required", err=True)
        sys.exit(2)
    overrides = {"epochs": epochs} if epochs else None
    try:
        report = train_dataset(dataset, data_dir, out_dir, seed=seed, overrides=overrides)
    except (MissingSource, FormatDrift) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except TrainingDiverged as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    click.echo(
        f"{dataset}: {report.n_train} train / {report.n_test} test rows, "
        f"input dim {report.input_dim}"
    )
    click.echo(
        f"train acc {report.train_acc:.1f}%  test acc {report.test_acc:.1f}%  "
        f"affected {report.affected_count} ({report.affected_percent:.1f}%)"
    )
    click.echo(
        f"stopped after {report.epochs_ran} epochs (best epoch {report.best_epoch}, "
        f"val loss {report.best_val_loss:.4f})"
    )
    click.echo(f"artifacts: {report.model_file.parent}")


if __name__ == "__main__":
    main()
