"""HTTP service: run registry, error mapping, and compare."""

import json

import pytest
from fastapi.testclient import TestClient

from recourse_rules.service import create_app

from .test_pipeline import write_mini


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def run_payload(fixture_dir, out_dir, **kw):
    payload = {
        "dataset_file": str(fixture_dir.dataset),
        "schema_file": str(fixture_dir.schema),
        "model_file": str(fixture_dir.model),
        "out_dir": str(out_dir),
        "p": 0.08,
        "s": 500,
    }
    payload.update(kw)
    return payload


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_create_run_and_fetch(client, fixture_dir, tmp_path):
    response = client.post("/runs", json=run_payload(fixture_dir, tmp_path / "out"))
    assert response.status_code == 200, response.text
    body = response.json()
    assert body["run_id"] == "run-0001"
    assert body["status"] == "ok"
    assert body["acc_r"] <= body["acc_v"]
    assert body["termination"] in ("converged", "bound-reached")

    listing = client.get("/runs").json()
    assert [item["run_id"] for item in listing] == ["run-0001"]
    assert listing[0]["method"] == "original"

    fetched = client.get("/runs/run-0001")
    assert fetched.status_code == 200
    assert fetched.json() == body


def test_unknown_run_is_404(client):
    assert client.get("/runs/run-9999").status_code == 404


def test_config_error_maps_to_400_with_field_errors(client, fixture_dir, tmp_path):
    payload = run_payload(fixture_dir, tmp_path / "out", p=5.0, method="fancy")
    response = client.post("/runs", json=payload)
    assert response.status_code == 400
    body = response.json()
    assert "p" in body["errors"]
    assert "method" in body["errors"]
    assert client.get("/runs").json() == []  # nothing registered


def test_lambda_alias_accepted(client, fixture_dir, tmp_path):
    payload = run_payload(fixture_dir, tmp_path / "out")
    payload["lambda"] = 0.01
    response = client.post("/runs", json=payload)
    assert response.status_code == 200
    assert response.json()["config"]["lam"] == 0.01


def test_type_errors_are_422(client, fixture_dir, tmp_path):
    payload = run_payload(fixture_dir, tmp_path / "out", p="not-a-number")
    assert client.post("/runs", json=payload).status_code == 422


def test_stage_failure_maps_to_500_and_registers(client, tmp_path):
    csv_path, sidecar_path, model_path = write_mini(tmp_path)
    doc = json.loads(model_path.read_text())
    doc["layers"][0]["weights"] = doc["layers"][0]["weights"][:1]
    model_path.write_text(json.dumps(doc))
    payload = {
        "dataset_file": str(csv_path),
        "schema_file": str(sidecar_path),
        "model_file": str(model_path),
        "out_dir": str(tmp_path / "out"),
        "p": 0.25,
    }
    response = client.post("/runs", json=payload)
    assert response.status_code == 500
    assert response.json()["stage"] == "load"
    listing = client.get("/runs").json()
    assert listing[0]["status"] == "failed:load"


def test_compare_endpoint(client, fixture_dir, tmp_path):
    request = {
        "runs": [
            run_payload(fixture_dir, tmp_path / "a"),
            run_payload(fixture_dir, tmp_path / "b", method="rl-reduction"),
        ],
        "labels": ["base", "reduced"],
    }
    response = client.post("/compare", json=request)
    assert response.status_code == 200
    rows = response.json()["rows"]
    assert {row["run"] for row in rows} == {"base", "reduced"}
    assert all(isinstance(row["wall_seconds"], float) for row in rows)


def test_compare_arity_maps_to_400(client, fixture_dir, tmp_path):
    request = {"runs": [run_payload(fixture_dir, tmp_path / "a")]}
    assert client.post("/compare", json=request).status_code == 400
