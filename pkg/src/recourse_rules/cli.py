"""Command-line client.

Every command goes through the HTTP API: by default against an in-process
application instance (no server needed), or against a running server when
--server is given. Exit codes: 0 success, 2 invalid configuration, 3 stage
failure.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import yaml


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # in-process transport; the shim warning is irrelevant to clients
        warnings.filterwarnings("ignore", message=".*starlette.testclient.*")
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _bail(response) -> None:
    """Print an error response and exit with the matching code."""
    try:
        body = response.json()
    except ValueError:
        body = {"detail": response.text}
    errors = body.get("errors", {})
    if errors:
        click.echo("error: invalid run configuration", err=True)
        for field, message in sorted(errors.items()):
            click.echo(f"  {field}: {message}", err=True)
    else:
        click.echo(f"error: {body.get('detail', 'request failed')}", err=True)
    if response.status_code == 400:
        sys.exit(2)
    if response.status_code == 422:  # request shape rejected before validation
        click.echo(json.dumps(body, indent=1), err=True)
        sys.exit(2)
    sys.exit(3)


@click.group()
def main():
    """Two-level recourse rule sets for tabular classifiers."""


@main.command("run")
@click.option("--dataset", "dataset_file", required=True, type=click.Path())
@click.option("--schema", "schema_file", required=True, type=click.Path())
@click.option("--model", "model_file", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--p", type=float, default=0.1, show_default=True, help="apriori support threshold")
@click.option(
    "--method",
    type=click.Choice(["original", "rl-reduction", "then-generation"]),
    default="original",
    show_default=True,
)
@click.option("--q", type=float, default=None, help="second-pass threshold (then-generation)")
@click.option("--r", type=int, default=None, help="V-Reduction budget, keep all evaluated")
@click.option("--r-prime", type=int, default=None, help="V-Reduction budget, keep accuracy gains")
@click.option("--s", type=int, default=None, help="V-Selection size")
@click.option("--eps1", type=int, default=20, show_default=True, help="max rules in the final set")
@click.option("--eps2", type=int, default=7, show_default=True, help="max combined If width")
@click.option("--eps3", type=int, default=10, show_default=True, help="max distinct subgroups")
@click.option("--lambda", "lam", type=float, default=0.0, show_default=True, help="cost weight")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--budget-seconds", type=float, default=None)
@click.option("--target-acc", type=float, default=None, help="skip Stage 3 below this acc(V)")
@click.option("--sd-file", type=click.Path(), default=None, help="user subgroup descriptors")
@click.option("--cost-table", type=click.Path(), default=None, help="per-feature cost weights")
@click.option("--workers", type=int, default=None, help="evaluation threads (default: cores)")
@click.option("--dump-ground-set", is_flag=True, default=False)
@click.option("--server", default=None, help="URL of a running service (default: in-process)")
@click.option("--json", "as_json", is_flag=True, default=False, help="print the full report")
def run_cmd(server, as_json, **payload):
    """Run the three-stage pipeline and write artifacts to --out."""
    payload["lambda"] = payload.pop("lam")
    body = {k: v for k, v in payload.items() if v is not None}
    with _client(server) as client:
        response = client.post("/runs", json=body)
        if response.status_code != 200:
            _bail(response)
        report = response.json()
    if as_json:
        click.echo(json.dumps(report, indent=1))
        return
    click.echo(f"{report['run_id']}: {report['status']}")
    click.echo(
        f"|SD|={report['sd_size']} |RL|={report['rl_size']} alpha={report['alpha']:.3g} "
        f"|V|={report['ground_set_size']} iterations={report['iteration_count']}"
    )
    click.echo(
        f"affected={report['affected_count']} evaluated={report['evaluated_count']} "
        f"kept={report['kept_count']}"
    )
    cost = report["cost_r"]
    click.echo(
        f"acc(V)={report['acc_v']:.2f}% ({report['acc_v_scope']})  "
        f"acc(R)={report['acc_r']:.2f}%  cost(R)={'n/a' if cost is None else f'{cost:.4f}'}  "
        f"termination={report['termination']}"
    )
    stages = " ".join(f"{k}={v:.3f}" for k, v in report["stage_seconds"].items())
    click.echo(f"stage seconds: {stages}")
    click.echo(f"artifacts: {report['out_dir']}")


@main.command("compare")
@click.argument("configs", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--labels", default=None, help="comma-separated run labels")
@click.option("--out", "out_path", type=click.Path(), default=None, help="merged CSV path")
@click.option("--server", default=None)
def compare_cmd(configs, labels, out_path, server):
    """Run several configs (YAML files) and merge their traces into one table."""
    runs = []
    for path in configs:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
        if not isinstance(doc, dict):
            click.echo(f"error: {path} must be a mapping of run options", err=True)
            sys.exit(2)
        runs.append(doc)
    body = {"runs": runs}
    if labels:
        body["labels"] = [x.strip() for x in labels.split(",")]
    with _client(server) as client:
        response = client.post("/compare", json=body)
        if response.status_code != 200:
            _bail(response)
        rows = response.json()["rows"]
    header = ["run", "wall_seconds", "stage", "evaluated", "kept", "acc_percent", "cost", "objective"]
    sink = open(out_path, "w", encoding="utf-8", newline="") if out_path else sys.stdout
    try:
        writer = csv.writer(sink)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if row[k] is None else row[k] for k in header])
    finally:
        if out_path:
            sink.close()
    if out_path:
        click.echo(f"merged trace: {out_path}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("recourse_rules.service.app:app", host=host, port=port)


@main.command("fixture")
@click.option("--out", "out_dir", required=True, type=click.Path())
def fixture_cmd(out_dir):
    """Copy the bundled synthetic dataset, schema and model into a directory."""
    from .fixtures import copy_fixture

    paths = copy_fixture(out_dir)
    click.echo(f"dataset: {paths.dataset}")
    click.echo(f"schema:  {paths.schema}")
    click.echo(f"model:   {paths.model}")


if __name__ == "__main__":
    main()
