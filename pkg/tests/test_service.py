import pytest
from fastapi.testclient import TestClient

from conftest import tiny_config
from uqbench.service.app import create_app


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    workspace = tmp_path_factory.mktemp("workspace")
    app = create_app(workspace)
    with TestClient(app) as c:
        yield c


@pytest.fixture(scope="module")
def config_payload():
    doc = tiny_config().to_dict()
    del doc["out_dir"]
    return doc


@pytest.fixture(scope="module")
def trained_run(client, config_payload):
    resp = client.post("/train", json={"config": config_payload, "run_id": "trained"})
    assert resp.status_code == 200, resp.text
    return resp.json()


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok" and body["version"]


def test_generate(client, config_payload):
    resp = client.post("/data/generate", json={"config": config_payload, "run_id": "gen"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["run_id"] == "gen"
    assert "train" in body["files"] and "heldout" in body["files"]


def test_train_returns_manifest(trained_run):
    manifest = trained_run["manifest"]
    assert set(manifest["checkpoints"]) == {"ce", "edl", "pn-in", "pn-out"}
    assert manifest["seed"] == 0


def test_evaluate_and_manifest(client, trained_run):
    resp = client.post("/evaluate", json={"run_id": "trained", "tests": ["correctness", "rater"]})
    assert resp.status_code == 200, resp.text
    summaries = resp.json()["summaries"]
    assert set(summaries) == {"ce-entropy", "mc-dropout", "edl", "pn-in", "pn-out"}
    assert summaries["ce-entropy"]["label"] == "CE"
    assert 0.0 <= summaries["edl"]["uar"] <= 1.0
    assert summaries["edl"]["per_snr"] is None  # sweep not requested

    resp = client.get("/runs/trained/manifest")
    assert resp.status_code == 200
    assert set(resp.json()["manifest"]["summaries"]) == set(summaries)


def test_sweep_endpoint(client, trained_run):
    resp = client.post("/sweep", json={"run_id": "trained"})
    assert resp.status_code == 200
    per_snr = resp.json()["summaries"]["pn-out"]["per_snr"]
    assert len(per_snr) == 3
    assert per_snr[0]["snr_db"] == 30.0


def test_plots_endpoint(client, trained_run):
    resp = client.post("/plots", json={"run_id": "trained"})
    assert resp.status_code == 200
    assert any(p.startswith("plots/snr_") for p in resp.json()["plots"])


def test_score_endpoint(client, trained_run):
    features = [[0.0] * 6, [2.1] * 6]
    for head in ("ce-entropy", "mc-dropout", "edl", "pn-out"):
        resp = client.post(
            "/score", json={"run_id": "trained", "head": head, "features": features, "mc_passes": 4}
        )
        assert resp.status_code == 200, resp.text
        records = resp.json()["records"]
        assert len(records) == 2
        for r in records:
            assert 0 <= r["predicted_class"] < 3
            assert r["entropy_nats"] >= 0
            assert (r["u_mass"] is not None) == (head == "edl")
    # determinism for mc head
    a = client.post("/score", json={"run_id": "trained", "head": "mc-dropout", "features": features, "seed": 5}).json()
    b = client.post("/score", json={"run_id": "trained", "head": "mc-dropout", "features": features, "seed": 5}).json()
    assert a == b


def test_score_validation(client, trained_run):
    resp = client.post("/score", json={"run_id": "trained", "head": "volcano", "features": [[0.0] * 6]})
    assert resp.status_code == 400
    resp = client.post("/score", json={"run_id": "trained", "head": "edl", "features": [[0.0] * 5]})
    assert resp.status_code == 400


def test_unknown_run_404(client):
    assert client.get("/runs/missing/manifest").status_code == 404
    assert client.post("/evaluate", json={"run_id": "missing"}).status_code == 404


def test_invalid_run_id_rejected(client):
    assert client.post("/evaluate", json={"run_id": "../escape"}).status_code == 400


def test_bad_config_400(client):
    resp = client.post("/train", json={"config": {"heads": ["volcano"]}})
    assert resp.status_code == 400
    assert "volcano" in resp.json()["detail"]


def test_run_all_endpoint(client, config_payload):
    small = dict(config_payload)
    small.update({"heads": ["ce-entropy"], "tests": ["correctness"], "n_train": 200, "n_dev": 40, "n_test": 80})
    resp = client.post("/runs", json={"config": small, "run_id": "full"})
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["summaries"]["ce-entropy"]["auroc_misclassification"] is not None
    assert any(a.startswith("plots/") for a in body["manifest"]["artifacts"])
