"""HTTP service contract: health, inpaint, metrics, error paths."""

import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from pcinpaint.server import create_app
from pcinpaint.unet import UNetConfig, UNetModel
from pcinpaint.weights_io import save_model


def png_bytes(arr):
    """(h,w) or (h,w,3) uint8 -> PNG bytes."""
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def rand_image(h, w, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


def mask_with_hole(h, w):
    m = np.full((h, w), 255, np.uint8)
    m[h // 4: h // 2, w // 4: w // 2] = 0
    return m


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    cfg = UNetConfig(depth=3, encoder_channels=(4, 8, 8),
                     kernel_sizes=(3, 3, 3))
    path = str(tmp_path_factory.mktemp("weights") / "m.pcnw")
    save_model(path, UNetModel(cfg, seed=0))
    return TestClient(create_app(path))


def decode_result(b64):
    with Image.open(io.BytesIO(base64.b64decode(b64))) as im:
        return np.asarray(im.convert("RGB"))


def post_inpaint(client, img, mask, method="pconv"):
    return client.post(
        f"/api/inpaint?method={method}",
        files={"image": ("i.png", png_bytes(img), "image/png"),
               "mask": ("m.png", png_bytes(mask), "image/png")})


def test_health(client):
    r = client.get("/api/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_inpaint_happy_path(client):
    img, mask = rand_image(32, 32), mask_with_hole(32, 32)
    r = post_inpaint(client, img, mask)
    assert r.status_code == 200
    body = r.json()
    assert set(body["results"]) == {"pconv"}
    assert body["timing_ms"]["pconv"] >= 0
    out = decode_result(body["results"]["pconv"])
    assert out.shape == (32, 32, 3)
    # valid pixels survive the composite + one 8-bit round trip exactly
    valid = mask >= 128
    assert np.array_equal(out[valid], img[valid])


def test_inpaint_both_returns_five_panel_inputs(client):
    img, mask = rand_image(32, 32, seed=1), mask_with_hole(32, 32)
    r = post_inpaint(client, img, mask, method="both")
    assert r.status_code == 200
    body = r.json()
    assert set(body["results"]) == {"pconv", "ns"}
    assert set(body["timing_ms"]) == {"pconv", "ns"}
    a = decode_result(body["results"]["pconv"])
    b = decode_result(body["results"]["ns"])
    assert a.shape == b.shape == (32, 32, 3)
    assert not np.array_equal(a, b)


def test_inpaint_bad_dims_422_with_divisor(client):
    img, mask = rand_image(30, 30), mask_with_hole(30, 30)
    r = post_inpaint(client, img, mask)
    assert r.status_code == 422
    assert r.json()["required_divisor"] == 8


def test_inpaint_mask_mismatch_400(client):
    r = post_inpaint(client, rand_image(32, 32), mask_with_hole(16, 16))
    assert r.status_code == 400


def test_inpaint_unknown_method_400(client):
    img, mask = rand_image(32, 32), mask_with_hole(32, 32)
    r = post_inpaint(client, img, mask, method="magic")
    assert r.status_code == 400


def test_inpaint_missing_field_400(client):
    r = client.post("/api/inpaint",
                    files={"image": ("i.png", png_bytes(rand_image(32, 32)),
                                     "image/png")})
    assert r.status_code == 400


def test_inpaint_garbage_payload_400(client):
    r = client.post(
        "/api/inpaint",
        files={"image": ("i.png", b"not a png", "image/png"),
               "mask": ("m.png", png_bytes(mask_with_hole(32, 32)),
                        "image/png")})
    assert r.status_code == 400


def test_oversize_body_413(client):
    blob = b"\0" * (17 * 1024 * 1024)
    r = client.post(
        "/api/inpaint",
        files={"image": ("i.png", blob, "image/png"),
               "mask": ("m.png", png_bytes(mask_with_hole(32, 32)),
                        "image/png")})
    assert r.status_code == 413


def test_metrics_endpoint(client):
    img = rand_image(32, 32, seed=2)
    mask = mask_with_hole(32, 32)
    r = client.post(
        "/api/metrics",
        files={"image": ("i.png", png_bytes(img), "image/png"),
               "mask": ("m.png", png_bytes(mask), "image/png"),
               "ground_truth": ("g.png", png_bytes(img), "image/png")})
    assert r.status_code == 200
    body = r.json()
    assert body["psnr"] == 100.0  # identical pair hits the cap
    assert body["ssim"] == pytest.approx(1.0, abs=1e-9)
    assert body["mse"] == 0.0
