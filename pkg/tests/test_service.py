import base64
import hashlib
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from lesionscreen import imaging, model
from lesionscreen.fixtures import synthetic_raster
from lesionscreen.service import ADVICE, ServiceConfig, create_app, load_config


@pytest.fixture()
def served(tmp_path):
    model_path = tmp_path / "ref.lsw1"
    model_path.write_bytes(model.export_reference_model(seed=0))
    config = ServiceConfig(model_path=model_path, storage_dir=tmp_path / "store")
    app = create_app(config)
    with TestClient(app) as client:
        yield client, config, tmp_path


def upload(client, png_bytes, **form):
    return client.post(
        "/api/v1/predict",
        files={"image": ("lesion.png", png_bytes, "image/png")},
        data={k: v for k, v in form.items()},
    )


def fixture_png(seed=0, side=80) -> bytes:
    return imaging.encode_png(synthetic_raster(seed, side))


class TestHealthAndInfo:
    def test_health_ok_with_model(self, served):
        client, _, _ = served
        body = client.get("/api/v1/health").json()
        assert body["status"] == "ok"
        assert body["uptime_seconds"] >= 0

    def test_health_503_without_model(self):
        with TestClient(create_app(ServiceConfig())) as client:
            assert client.get("/api/v1/health").status_code == 503
            assert client.get("/api/v1/model-info").status_code == 503

    def test_model_id_matches_file_header_hash(self, served):
        client, config, _ = served
        data = config.model_path.read_bytes()
        expected = hashlib.sha256(data[44:]).hexdigest()
        assert client.get("/api/v1/health").json()["model_id"] == expected

    def test_model_info_reflects_graph(self, served):
        client, config, _ = served
        info = client.get("/api/v1/model-info").json()
        assert info["class_names"] == list(model.load_model(config.model_path.read_bytes()).class_names)
        assert info["input_side"] == 64
        assert info["threshold"] == config.threshold
        assert info["format_version"] == "LSW1"


class TestPredictEndpoint:
    def test_valid_upload_without_consent_stores_nothing(self, served):
        client, config, _ = served
        response = upload(client, fixture_png(), consent_to_store="false")
        assert response.status_code == 200
        body = response.json()
        assert set(body["probabilities"]) == set(model.load_model(config.model_path.read_bytes()).class_names)
        assert sum(body["probabilities"].values()) == pytest.approx(1.0, abs=1e-6)
        assert body["advice"] == ADVICE
        assert body["heatmap"] is None
        assert not config.storage_dir.exists()

    def test_empty_upload_rejected(self, served):
        client, _, _ = served
        assert upload(client, b"").status_code == 400

    def test_non_image_rejected(self, served):
        client, _, _ = served
        response = upload(client, b"plainly not an image")
        assert response.status_code == 400
        assert response.json()["error"] == "UnsupportedFormat"

    def test_corrupt_png_rejected(self, served):
        client, _, _ = served
        response = upload(client, fixture_png()[:40])
        assert response.status_code == 400
        assert response.json()["error"] == "MalformedImage"

    def test_oversize_upload_rejected(self, tmp_path):
        model_path = tmp_path / "m.lsw1"
        model_path.write_bytes(model.export_reference_model(seed=0))
        config = ServiceConfig(model_path=model_path, max_upload_bytes=1024, storage_dir=tmp_path / "s")
        with TestClient(create_app(config)) as client:
            assert upload(client, fixture_png(side=128)).status_code == 413

    def test_predict_503_without_model(self):
        with TestClient(create_app(ServiceConfig())) as client:
            assert upload(client, fixture_png()).status_code == 503

    def test_identical_uploads_identical_bodies(self, served):
        client, _, _ = served
        png = fixture_png(3)
        first = upload(client, png).content
        second = upload(client, png).content
        assert first == second

    def test_concurrent_identical_requests_agree(self, served):
        client, _, _ = served
        png = fixture_png(4)
        with ThreadPoolExecutor(max_workers=8) as pool:
            bodies = list(pool.map(lambda _: upload(client, png).content, range(16)))
        assert len(set(bodies)) == 1

    def test_heatmap_is_decodable_overlay(self, served):
        client, _, _ = served
        body = upload(client, fixture_png(5), want_heatmap="true").json()
        raster = imaging.decode_image(base64.b64decode(body["heatmap"]))
        assert (raster.width, raster.height) == (64, 64)

    def test_statelessness_across_history(self, served):
        client, _, _ = served
        target = fixture_png(6)
        baseline = upload(client, target).json()["probabilities"]
        for seed in range(7, 12):
            upload(client, fixture_png(seed), consent_to_store="true")
        again = upload(client, target).json()["probabilities"]
        assert baseline == again


class TestConsentGate:
    def test_no_consent_sequence_stores_zero_files(self, served):
        client, config, _ = served
        for seed in range(10):
            assert upload(client, fixture_png(seed), consent_to_store="false").status_code == 200
        assert not config.storage_dir.exists()

    def test_consented_requests_store_content_addressed(self, served):
        client, config, _ = served
        payloads = [fixture_png(seed) for seed in range(5)]
        for png in payloads:
            upload(client, png, consent_to_store="true")
        objects = config.storage_dir / "objects"
        stored = sorted(p.name for p in objects.iterdir())
        assert stored == sorted(hashlib.sha256(p).hexdigest() for p in payloads)
        ledger = (config.storage_dir / "consent.log").read_text().splitlines()
        assert len(ledger) == 5
        assert all(line.endswith("consent=true") for line in ledger)

    def test_stored_bytes_match_upload(self, served):
        client, config, _ = served
        png = fixture_png(42)
        upload(client, png, consent_to_store="true")
        digest = hashlib.sha256(png).hexdigest()
        assert (config.storage_dir / "objects" / digest).read_bytes() == png


class TestConfig:
    def test_file_parsing_and_env_override(self, tmp_path):
        cfg_file = tmp_path / "svc.cfg"
        cfg_file.write_text(
            "svc/1\n"
            "# demo config\n"
            "model = ref.lsw1\n"
            "port = 9000\n"
            "threshold = 0.25\n"
        )
        cfg = load_config(cfg_file, env={})
        assert cfg.port == 9000 and cfg.threshold == 0.25
        cfg = load_config(cfg_file, env={"LESIONSCREEN_THRESHOLD": "0.75", "LESIONSCREEN_PORT": "8123"})
        assert cfg.threshold == 0.75 and cfg.port == 8123

    def test_missing_version_header_rejected(self, tmp_path):
        bad = tmp_path / "svc.cfg"
        bad.write_text("model = x\n")
        from lesionscreen.errors import LesionScreenError

        with pytest.raises(LesionScreenError):
            load_config(bad)

    def test_unknown_key_rejected(self, tmp_path):
        bad = tmp_path / "svc.cfg"
        bad.write_text("svc/1\nvolume = 11\n")
        from lesionscreen.errors import LesionScreenError

        with pytest.raises(LesionScreenError):
            load_config(bad)

    def test_app_runs_without_webui_build(self, tmp_path):
        model_path = tmp_path / "m.lsw1"
        model_path.write_bytes(model.export_reference_model(seed=0))
        config = ServiceConfig(model_path=model_path, webui_dir=tmp_path / "missing")
        with TestClient(create_app(config)) as client:
            assert client.get("/api/v1/health").status_code == 200

    def test_webui_served_when_present(self, tmp_path):
        model_path = tmp_path / "m.lsw1"
        model_path.write_bytes(model.export_reference_model(seed=0))
        webui = tmp_path / "dist"
        webui.mkdir()
        (webui / "index.html").write_text("<!doctype html><title>screen</title>")
        config = ServiceConfig(model_path=model_path, webui_dir=webui)
        with TestClient(create_app(config)) as client:
            response = client.get("/")
            assert response.status_code == 200
            assert "screen" in response.text
