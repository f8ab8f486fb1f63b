import json
import os

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from relightkit.cli import main
from relightkit.detail_layers import save_dictionary
from relightkit.evaluation import synth_fragment, synth_object
from relightkit.images import load_pfm, save_png
from relightkit.lights import SH9, light_to_record, save_light
from relightkit.model import load_model
from relightkit.render import relight_png
from relightkit.service import create_app


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, smooth_dictionary):
    """Dictionary file, fragment image, and matte on disk."""
    d = tmp_path_factory.mktemp("cli")
    save_dictionary(smooth_dictionary, d / "dict.pfm", d / "dict.json")
    obj = synth_object(0, 96)
    img, mask = synth_fragment(obj)
    from relightkit.images import save_pfm, save_mask_png

    save_pfm(img, d / "fragment.pfm")
    save_mask_png(mask, d / "mask.png")
    return d


@pytest.fixture(scope="module")
def model_dir(workdir):
    runner = CliRunner()
    out = workdir / "model"
    res = runner.invoke(main, [
        "build", "--image", str(workdir / "fragment.pfm"),
        "--mask", str(workdir / "mask.png"),
        "--dict", str(workdir / "dict.pfm"), "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    assert "light fit" in res.output and "layer rms" in res.output
    return out


def test_build_model_passes_reconstruction_identity(model_dir):
    from relightkit.model import WeightVector, reshade

    model = load_model(model_dir)
    out = reshade(model, model.fitted_light, WeightVector(1.0, 0.0))
    # disk storage is float32, so the identity holds to float32 rounding
    assert np.max(np.abs(out - model.shading)) < 1e-6


def test_build_deterministic_bytes(workdir, model_dir):
    runner = CliRunner()
    out2 = workdir / "model2"
    res = runner.invoke(main, [
        "build", "--image", str(workdir / "fragment.pfm"),
        "--mask", str(workdir / "mask.png"),
        "--dict", str(workdir / "dict.pfm"), "--out", str(out2),
    ])
    assert res.exit_code == 0, res.output
    for name in sorted(os.listdir(model_dir)):
        assert (model_dir / name).read_bytes() == (out2 / name).read_bytes(), name


def test_build_missing_mask_is_usage_error(workdir):
    runner = CliRunner()
    res = runner.invoke(main, [
        "build", "--image", str(workdir / "fragment.pfm"),
        "--dict", str(workdir / "dict.pfm"), "--out", str(workdir / "nope"),
    ])
    assert res.exit_code == 2


def test_build_unreadable_image_is_computation_error(workdir, tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png")
    runner = CliRunner()
    res = runner.invoke(main, [
        "build", "--image", str(bad), "--mask", str(workdir / "mask.png"),
        "--dict", str(workdir / "dict.pfm"), "--out", str(tmp_path / "m"),
    ])
    assert res.exit_code == 1


def test_relight_pfm_matches_albedo_times_shading(workdir, model_dir):
    model = load_model(model_dir)
    light_path = workdir / "fitted.json"
    save_light(model.fitted_light, light_path)
    out = workdir / "relit.pfm"
    runner = CliRunner()
    res = runner.invoke(main, [
        "relight", "--model", str(model_dir), "--light", str(light_path),
        "--wp", "1.0", "--wg", "0.0", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    relit = load_pfm(out).data
    om = model.mask.omega
    expect = model.albedo * model.shading[:, :, None]
    assert np.max(np.abs(relit[om] - expect[om])) < 1e-5


def test_relight_weight_defaults_are_one(workdir, model_dir):
    light_path = workdir / "fitted.json"
    runner = CliRunner()
    o1, o2 = workdir / "d1.png", workdir / "d2.png"
    r1 = runner.invoke(main, ["relight", "--model", str(model_dir),
                              "--light", str(light_path), "--out", str(o1)])
    r2 = runner.invoke(main, ["relight", "--model", str(model_dir),
                              "--light", str(light_path), "--wp", "1.0",
                              "--wg", "1.0", "--out", str(o2)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert o1.read_bytes() == o2.read_bytes()


def test_relight_malformed_light_fails(workdir, model_dir, tmp_path):
    bad = tmp_path / "bad_light.json"
    bad.write_text(json.dumps({"type": "sh", "coefficients": [0.0] * 8}))
    runner = CliRunner()
    res = runner.invoke(main, ["relight", "--model", str(model_dir),
                               "--light", str(bad), "--out", str(tmp_path / "x.png")])
    assert res.exit_code == 1
    assert "coefficients" in res.output


def test_composite_cli(tmp_path):
    rng = np.random.default_rng(0)
    from relightkit.images import LinearImage

    t = rng.uniform(0, 1, (8, 8, 3))
    for name, arr in (("t", t), ("r", t * 0.5), ("e", t * 0.5)):
        save_png(LinearImage(arr), tmp_path / f"{name}.png", transfer="srgb")
    save_png(LinearImage(np.zeros((8, 8))), tmp_path / "m.png", transfer="linear")
    runner = CliRunner()
    res = runner.invoke(main, [
        "composite", "--target", str(tmp_path / "t.png"),
        "--render", str(tmp_path / "r.png"), "--empty", str(tmp_path / "e.png"),
        "--mask", str(tmp_path / "m.png"), "--out", str(tmp_path / "c.png"),
    ])
    assert res.exit_code == 0, res.output
    # empty matte, render == empty: composite equals the target
    from relightkit.images import load_image

    back = load_image(tmp_path / "c.png")
    orig = load_image(tmp_path / "t.png")
    assert np.allclose(back.data, orig.data, atol=1e-6)


def test_mesh_cli(workdir, model_dir):
    runner = CliRunner()
    out = workdir / "mesh.obj"
    res = runner.invoke(main, ["mesh", "--model", str(model_dir),
                               "--out", str(out), "--extrude", "2.0"])
    assert res.exit_code == 0, res.output
    text = out.read_text()
    assert text.startswith("v ")
    assert "\nf " in text
    res2 = runner.invoke(main, ["mesh", "--model", str(model_dir),
                                "--out", str(out), "--focal", "48,48,500"])
    assert res2.exit_code == 0


def test_eval_cli_writes_reports(workdir, tmp_path):
    runner = CliRunner()
    out = tmp_path / "eval"
    res = runner.invoke(main, [
        "eval", "--out", str(out), "--dict", str(workdir / "dict.pfm"),
        "--objects", "2", "--lights", "2", "--size", "96",
        "--modes", "oracle,coarse",
    ])
    assert res.exit_code == 0, res.output
    lines = (out / "records.jsonl").read_text().splitlines()
    assert len(lines) == 2 * 2 * 2
    assert "mean[oracle]" in (out / "report.txt").read_text()


# service ------------------------------------------------------------------


@pytest.fixture(scope="module")
def client(model_dir):
    model = load_model(model_dir)
    return TestClient(create_app(model)), model


def test_service_model_metadata(client):
    c, model = client
    r = c.get("/api/model")
    assert r.status_code == 200
    body = r.json()
    assert body["width"] == model.mask.width
    assert body["height"] == model.mask.height
    assert body["fitted_light"]["type"] == "points"
    assert "sp" in body["layer_rms"] and "sg" in body["layer_rms"]


def test_service_relight_matches_cli_bytes(client, workdir, model_dir):
    c, model = client
    light_rec = light_to_record(model.fitted_light)
    r = c.post("/api/relight", json={"light": light_rec, "wp": 1.0, "wg": 0.0})
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    direct = relight_png(model, model.fitted_light, 1.0, 0.0)
    assert r.content == direct

    runner = CliRunner()
    light_path = workdir / "fitted2.json"
    save_light(model.fitted_light, light_path)
    out = workdir / "cli_render.png"
    res = runner.invoke(main, ["relight", "--model", str(model_dir),
                               "--light", str(light_path), "--wp", "1.0",
                               "--wg", "0.0", "--out", str(out)])
    assert res.exit_code == 0
    assert out.read_bytes() == r.content


def test_service_repeated_requests_identical(client):
    c, model = client
    body = {"light": light_to_record(SH9([1, 0, 0.3, 0.1, 0, 0, 0, 0, 0])),
            "wp": 0.8, "wg": 1.2, "exposure": 1.1}
    r1 = c.post("/api/relight", json=body)
    r2 = c.post("/api/relight", json=body)
    assert r1.content == r2.content


def test_service_layers(client):
    c, _ = client
    for name in ("albedo", "coarse", "sp", "sg"):
        r = c.get(f"/api/layers/{name}")
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
    assert c.get("/api/layers/specular").status_code == 404


def test_service_malformed_body_400(client):
    c, _ = client
    assert c.post("/api/relight", json={"wp": 1.0}).status_code == 400
    bad_light = {"light": {"type": "sh", "coefficients": [0.0] * 8}}
    r = c.post("/api/relight", json=bad_light)
    assert r.status_code == 400
    assert "coefficients" in r.json()["error"]


def test_service_index_fallback(client):
    c, _ = client
    r = c.get("/")
    assert r.status_code == 200
    assert "relightkit" in r.text
